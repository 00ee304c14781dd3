//! Cross-segment coherence: for each word type, how well each segment's
//! tokens fit their own segment mean versus the other segment's mean.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cluster::{CentroidTable, ClusterKey, KeyMode};
use crate::corpus::{Segment, TokenRecord, Vocab};
use crate::error::{Error, Result, StatsError};
use crate::scalar::{sq_dist, widen_into, Scalar};
use crate::stats::{paired_t, spearman, Spearman, StatResult};

/// Mean squared Euclidean distance of the group to `reference`.
pub fn mse<T, V, I>(group: I, reference: &[T]) -> Result<T>
where
    T: Scalar,
    V: AsRef<[T]>,
    I: IntoIterator<Item = V>,
{
    let mut total = T::zero();
    let mut n = 0usize;
    for v in group {
        let v = v.as_ref();
        if v.len() != reference.len() {
            return Err(Error::DimensionMismatch {
                expected: reference.len(),
                found: v.len(),
            });
        }
        total += sq_dist(v, reference);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("mse group"));
    }
    Ok(total / T::cast(n))
}

/// Where the per-token references come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Self reference is the mean of the group itself, cross reference the
    /// mean of the other segment's group.
    #[default]
    InSample,
    /// Tokens are split into alternating halves by their order within the
    /// group; a token in half h is compared to the half-(1-h) mean of its own
    /// segment and the half-(1-h) mean of the other segment. Neither
    /// reference contains the token, so equal distributions give equal
    /// expected scores.
    SplitHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsePair {
    pub type_id: u32,
    pub segment: Segment,
    pub count: u64,
    pub mse_self: f64,
    pub mse_cross: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsePairTable {
    pub rows: Vec<MsePair>,
    /// Types lacking `min_count` tokens in one of the segments.
    pub skipped_types: u64,
    pub reference: ReferenceMode,
    pub min_count: u64,
}

impl MsePairTable {
    pub fn self_scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mse_self).collect()
    }

    pub fn cross_scores(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mse_cross).collect()
    }
}

#[derive(Default)]
struct PairAcc {
    sum_self: f64,
    sum_cross: f64,
    n: u64,
}

/// Builds the self-vs-cross table in one pass over `records` (two passes for
/// [`ReferenceMode::SplitHalf`]). `centroids` must be keyed by type and
/// segment and built from the same records.
pub fn segment_mse_pairs<T: Scalar>(
    records: &[TokenRecord],
    centroids: &CentroidTable<T>,
    min_count: u64,
    reference: ReferenceMode,
) -> Result<MsePairTable> {
    if centroids.mode() != KeyMode::TypeSegment {
        return Err(Error::InvalidParameter(
            "segment MSE needs a centroid table keyed by type and segment".into(),
        ));
    }
    if min_count < 2 {
        return Err(Error::InvalidParameter("min_count must be at least 2".into()));
    }
    let mut all_types = BTreeSet::new();
    let mut qualifying = BTreeSet::new();
    for (key, _) in centroids.iter() {
        let t = key.type_id();
        all_types.insert(t);
        let ok = Segment::BOTH
            .iter()
            .all(|&s| centroids.count(&ClusterKey::TypeSegment(t, s)) >= min_count);
        if ok {
            qualifying.insert(t);
        }
    }

    let mut acc: BTreeMap<(u32, Segment), PairAcc> = BTreeMap::new();
    let mut buf: Vec<T> = Vec::with_capacity(centroids.dim());
    match reference {
        ReferenceMode::InSample => {
            let mut means: BTreeMap<(u32, Segment), Vec<T>> = BTreeMap::new();
            for &t in &qualifying {
                for s in Segment::BOTH {
                    means.insert((t, s), centroids.centroid(&ClusterKey::TypeSegment(t, s)).unwrap());
                }
            }
            for r in records {
                if !qualifying.contains(&r.type_id) {
                    continue;
                }
                widen_into(&r.vector, &mut buf);
                let own = &means[&(r.type_id, r.segment)];
                let other = &means[&(r.type_id, r.segment.other())];
                if buf.len() != own.len() {
                    return Err(Error::DimensionMismatch {
                        expected: own.len(),
                        found: buf.len(),
                    });
                }
                let a = acc.entry((r.type_id, r.segment)).or_default();
                a.sum_self += sq_dist(&buf, own).to_f64_lossy();
                a.sum_cross += sq_dist(&buf, other).to_f64_lossy();
                a.n += 1;
            }
        }
        ReferenceMode::SplitHalf => {
            let dim = centroids.dim();
            let mut seen: BTreeMap<(u32, Segment), u64> = BTreeMap::new();
            let mut halves: BTreeMap<(u32, Segment, u8), (Vec<T>, u64)> = BTreeMap::new();
            let mut half_of = Vec::with_capacity(records.len());
            for r in records {
                if !qualifying.contains(&r.type_id) {
                    half_of.push(0u8);
                    continue;
                }
                if r.vector.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: r.vector.len(),
                    });
                }
                let k = seen.entry((r.type_id, r.segment)).or_default();
                let h = (*k % 2) as u8;
                *k += 1;
                half_of.push(h);
                let e = halves
                    .entry((r.type_id, r.segment, h))
                    .or_insert_with(|| (vec![T::zero(); dim], 0));
                crate::scalar::add_assign(&mut e.0, &r.vector);
                e.1 += 1;
            }
            let means: BTreeMap<(u32, Segment, u8), Vec<T>> = halves
                .into_iter()
                .map(|(k, (sum, n))| {
                    let n = T::cast(n);
                    (k, sum.into_iter().map(|s| s / n).collect())
                })
                .collect();
            for (r, &h) in records.iter().zip(&half_of) {
                if !qualifying.contains(&r.type_id) {
                    continue;
                }
                widen_into(&r.vector, &mut buf);
                let own = &means[&(r.type_id, r.segment, 1 - h)];
                let other = &means[&(r.type_id, r.segment.other(), 1 - h)];
                let a = acc.entry((r.type_id, r.segment)).or_default();
                a.sum_self += sq_dist(&buf, own).to_f64_lossy();
                a.sum_cross += sq_dist(&buf, other).to_f64_lossy();
                a.n += 1;
            }
        }
    }

    let rows = acc
        .into_iter()
        .map(|((type_id, segment), a)| MsePair {
            type_id,
            segment,
            count: a.n,
            mse_self: a.sum_self / a.n as f64,
            mse_cross: a.sum_cross / a.n as f64,
        })
        .collect();
    Ok(MsePairTable {
        rows,
        skipped_types: (all_types.len() - qualifying.len()) as u64,
        reference,
        min_count,
    })
}

/// Paired t-test of self-reference MSE against cross-reference MSE.
/// Negative d means each segment's own mean fits it better.
pub fn segment_shift_test(table: &MsePairTable) -> Result<StatResult, StatsError> {
    paired_t(&table.self_scores(), &table.cross_scores())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyEffect {
    pub spearman: Spearman,
    pub rows_used: usize,
    pub rows_skipped: usize,
}

/// Spearman correlation between ln(frequency) and |mse_self - mse_cross|.
pub fn frequency_effect(table: &MsePairTable, vocab: &Vocab) -> Result<FrequencyEffect, StatsError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for r in &table.rows {
        match vocab.frequency(r.type_id) {
            Some(f) if f > 0 => {
                x.push((f as f64).ln());
                y.push((r.mse_self - r.mse_cross).abs());
            }
            _ => {}
        }
    }
    let spearman = spearman(&x, &y)?;
    Ok(FrequencyEffect {
        spearman,
        rows_used: x.len(),
        rows_skipped: table.rows.len() - x.len(),
    })
}
