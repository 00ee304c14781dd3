use std::borrow::Borrow;
use std::collections::BTreeMap;

use serde::Serialize;

use super::record::{Segment, TokenRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeCounts {
    pub total: u64,
    pub a: u64,
    pub b: u64,
}

impl TypeCounts {
    pub fn segment(&self, seg: Segment) -> u64 {
        match seg {
            Segment::A => self.a,
            Segment::B => self.b,
        }
    }
}

/// Per-type token counts. Mergeable across shards.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeIndex {
    counts: BTreeMap<u32, TypeCounts>,
}

impl TypeIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<I>(records: I) -> Self
    where
        I: IntoIterator,
        I::Item: Borrow<TokenRecord>,
    {
        let mut idx = Self::new();
        for r in records {
            idx.add(r.borrow());
        }
        idx
    }

    pub fn add(&mut self, record: &TokenRecord) {
        let c = self.counts.entry(record.type_id).or_default();
        c.total += 1;
        match record.segment {
            Segment::A => c.a += 1,
            Segment::B => c.b += 1,
        }
    }

    pub fn merge(&mut self, other: &TypeIndex) {
        for (&id, c) in &other.counts {
            let e = self.counts.entry(id).or_default();
            e.total += c.total;
            e.a += c.a;
            e.b += c.b;
        }
    }

    pub fn get(&self, type_id: u32) -> Option<&TypeCounts> {
        self.counts.get(&type_id)
    }

    pub fn total(&self, type_id: u32) -> u64 {
        self.get(type_id).map_or(0, |c| c.total)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn token_count(&self) -> u64 {
        self.counts.values().map(|c| c.total).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &TypeCounts)> {
        self.counts.iter().map(|(&k, v)| (k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: u32, s: Segment) -> TokenRecord {
        TokenRecord::new(t, s, 0, 0, vec![0.0])
    }

    #[test]
    fn counts_per_segment() {
        assert!(TypeIndex::from_records(Vec::<TokenRecord>::new()).is_empty());
        let recs = [rec(7, Segment::A), rec(7, Segment::B), rec(7, Segment::A)];
        let idx = TypeIndex::from_records(&recs);
        assert_eq!(idx.get(7), Some(&TypeCounts { total: 3, a: 2, b: 1 }));
        assert_eq!(idx.token_count(), 3);
    }

    proptest! {
        #[test]
        fn merge_matches_single_pass(
            items in prop::collection::vec((0u32..6, any::<bool>()), 0..60),
            split in 0usize..60,
        ) {
            let recs: Vec<_> = items
                .iter()
                .map(|&(t, b)| rec(t, if b { Segment::B } else { Segment::A }))
                .collect();
            let split = split.min(recs.len());
            let mut left = TypeIndex::from_records(&recs[..split]);
            left.merge(&TypeIndex::from_records(&recs[split..]));
            let whole = TypeIndex::from_records(&recs);
            prop_assert_eq!(&left, &whole);
            prop_assert_eq!(whole.token_count(), recs.len() as u64);
        }
    }
}
