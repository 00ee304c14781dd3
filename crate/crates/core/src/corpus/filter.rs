use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use super::index::TypeIndex;
use super::record::{Segment, TokenRecord};
use super::vocab::{SpecialKind, Vocab};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSet {
    pub a: bool,
    pub b: bool,
}

impl SegmentSet {
    pub const ALL: SegmentSet = SegmentSet { a: true, b: true };

    pub fn only(seg: Segment) -> Self {
        match seg {
            Segment::A => SegmentSet { a: true, b: false },
            Segment::B => SegmentSet { a: false, b: true },
        }
    }

    pub fn contains(&self, seg: Segment) -> bool {
        match seg {
            Segment::A => self.a,
            Segment::B => self.b,
        }
    }
}

impl Default for SegmentSet {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterPolicy {
    /// Drop every record whose type carries a special-token flag.
    pub exclude_special: bool,
    /// With `exclude_special`, still keep separator tokens.
    pub keep_sep: bool,
    /// Minimum total token count of a type (from a prior indexing pass). 0 and 1 disable it.
    pub min_type_count: u64,
    pub segments: SegmentSet,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            exclude_special: false,
            keep_sep: false,
            min_type_count: 0,
            segments: SegmentSet::ALL,
        }
    }
}

/// A [`FilterPolicy`] bound to the vocabulary and type counts it consults.
#[derive(Debug, Clone, Copy)]
pub struct RecordFilter<'a> {
    policy: FilterPolicy,
    vocab: Option<&'a Vocab>,
    index: Option<&'a TypeIndex>,
}

impl<'a> RecordFilter<'a> {
    pub fn new(policy: FilterPolicy, vocab: Option<&'a Vocab>, index: Option<&'a TypeIndex>) -> Result<Self> {
        if policy.min_type_count > 1 && index.is_none() {
            return Err(Error::InvalidParameter(
                "min_type_count > 1 requires a type index from a prior pass".into(),
            ));
        }
        Ok(Self { policy, vocab, index })
    }

    /// Filter that accepts everything.
    pub fn pass_all() -> Self {
        Self {
            policy: FilterPolicy::default(),
            vocab: None,
            index: None,
        }
    }

    pub fn policy(&self) -> &FilterPolicy {
        &self.policy
    }

    pub fn accepts(&self, r: &TokenRecord) -> bool {
        if !self.policy.segments.contains(r.segment) {
            return false;
        }
        if self.policy.exclude_special {
            match self.vocab.and_then(|v| v.special(r.type_id)) {
                Some(SpecialKind::Sep) if self.policy.keep_sep => {}
                Some(_) => return false,
                None => {}
            }
        }
        if self.policy.min_type_count > 1 {
            if let Some(idx) = self.index {
                if idx.total(r.type_id) < self.policy.min_type_count {
                    return false;
                }
            }
        }
        true
    }
}

/// Lazily keeps the records accepted by `filter`, in input order.
pub fn filter_records<'f, I>(records: I, filter: &'f RecordFilter<'f>) -> impl Iterator<Item = I::Item> + 'f
where
    I: IntoIterator,
    I::IntoIter: 'f,
    I::Item: Borrow<TokenRecord>,
{
    records.into_iter().filter(move |r| filter.accepts(r.borrow()))
}
