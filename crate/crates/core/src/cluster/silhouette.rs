//! Centroid-variant silhouette: cohesion and separation are distances to
//! cluster means rather than mean distances to cluster members.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::centroid::{Centroids, ClusterKey};
use crate::corpus::{Segment, TokenRecord};
use crate::error::{Error, Result};
use crate::scalar::{euclidean, widen_into, Scalar};
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteValue<T = f64> {
    pub coh: T,
    pub sep: T,
    pub silh: T,
}

impl<T: Scalar> SilhouetteValue<T> {
    /// `(sep - coh) / max(sep, coh)`, and 0 when the two are equal (including both 0).
    pub fn from_distances(coh: T, sep: T) -> Self {
        let silh = if coh == sep {
            T::zero()
        } else {
            ((sep - coh) / sep.max(coh)).max(-T::one()).min(T::one())
        };
        Self { coh, sep, silh }
    }

    pub fn to_f64(self) -> SilhouetteValue<f64> {
        SilhouetteValue {
            coh: self.coh.to_f64_lossy(),
            sep: self.sep.to_f64_lossy(),
            silh: self.silh.to_f64_lossy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SilhouetteOptions {
    /// Exclude the scored token from its own centroid.
    pub leave_one_out: bool,
}

/// Silhouette of a single observation against a frozen centroid table.
pub fn silhouette_token<T: Scalar>(
    v: &[T],
    own_key: ClusterKey,
    centroids: &Centroids<T>,
    opts: SilhouetteOptions,
) -> Result<SilhouetteValue<T>> {
    if centroids.len() < 2 {
        return Err(Error::SeparationUndefined {
            clusters: centroids.len(),
        });
    }
    if v.len() != centroids.dim() {
        return Err(Error::DimensionMismatch {
            expected: centroids.dim(),
            found: v.len(),
        });
    }
    let own = centroids.position(&own_key).ok_or(Error::MissingKey(own_key))?;
    let coh = if opts.leave_one_out {
        let n = centroids.count(own);
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "leave-one-out cohesion needs at least 2 members in {own_key}"
            )));
        }
        let m = T::cast(n - 1);
        centroids
            .sum(own)
            .iter()
            .zip(v)
            .map(|(&s, &x)| {
                let d = x - (s - x) / m;
                d * d
            })
            .sum::<T>()
            .sqrt()
    } else {
        euclidean(v, centroids.mean(own))
    };
    let sep = (0..centroids.len())
        .filter(|&j| j != own)
        .map(|j| euclidean(v, centroids.mean(j)))
        .fold(T::infinity(), T::min);
    Ok(SilhouetteValue::from_distances(coh, sep))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    /// Index of the record in the scored slice.
    pub ordinal: u64,
    pub type_id: u32,
    pub segment: Segment,
    #[serde(flatten)]
    pub value: SilhouetteValue<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeAggregate {
    pub type_id: u32,
    pub count: u64,
    pub mean_silh: f64,
    pub min_silh: f64,
    pub max_silh: f64,
    pub frac_negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct CorpusAggregate {
    pub n_tokens: u64,
    pub n_types: u64,
    pub mean_silh: Option<f64>,
    pub median_silh: Option<f64>,
    pub mean_coh: Option<f64>,
    pub mean_sep: Option<f64>,
    pub frac_tokens_negative: Option<f64>,
    pub frac_types_all_negative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilhouetteReport {
    pub corpus: CorpusAggregate,
    /// Tokens not scored because their cluster has a single member.
    pub skipped_singleton_tokens: u64,
    #[serde(skip)]
    pub per_type: Vec<TypeAggregate>,
    #[serde(skip)]
    pub tokens: Vec<TokenScore>,
}

impl SilhouetteReport {
    /// Builds every aggregate from per-token scores.
    pub fn from_tokens(tokens: Vec<TokenScore>, skipped_singleton_tokens: u64) -> Self {
        struct Acc {
            count: u64,
            sum: f64,
            min: f64,
            max: f64,
            neg: u64,
        }
        let mut by_type: BTreeMap<u32, Acc> = BTreeMap::new();
        for t in &tokens {
            let a = by_type.entry(t.type_id).or_insert(Acc {
                count: 0,
                sum: 0.0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                neg: 0,
            });
            let s = t.value.silh;
            a.count += 1;
            a.sum += s;
            a.min = a.min.min(s);
            a.max = a.max.max(s);
            if s < 0.0 {
                a.neg += 1;
            }
        }
        let per_type: Vec<TypeAggregate> = by_type
            .into_iter()
            .map(|(type_id, a)| TypeAggregate {
                type_id,
                count: a.count,
                mean_silh: a.sum / a.count as f64,
                min_silh: a.min,
                max_silh: a.max,
                frac_negative: a.neg as f64 / a.count as f64,
            })
            .collect();

        let n = tokens.len();
        let corpus = if n == 0 {
            CorpusAggregate::default()
        } else {
            let nf = n as f64;
            let silh: Vec<f64> = tokens.iter().map(|t| t.value.silh).collect();
            CorpusAggregate {
                n_tokens: n as u64,
                n_types: per_type.len() as u64,
                mean_silh: Some(silh.iter().sum::<f64>() / nf),
                median_silh: median(&silh),
                mean_coh: Some(tokens.iter().map(|t| t.value.coh).sum::<f64>() / nf),
                mean_sep: Some(tokens.iter().map(|t| t.value.sep).sum::<f64>() / nf),
                frac_tokens_negative: Some(silh.iter().filter(|&&s| s < 0.0).count() as f64 / nf),
                frac_types_all_negative: Some(
                    per_type.iter().filter(|t| t.frac_negative == 1.0).count() as f64 / per_type.len() as f64,
                ),
            }
        };
        Self {
            corpus,
            skipped_singleton_tokens,
            per_type,
            tokens,
        }
    }

    pub fn type_aggregate(&self, type_id: u32) -> Option<&TypeAggregate> {
        self.per_type
            .binary_search_by_key(&type_id, |t| t.type_id)
            .ok()
            .map(|i| &self.per_type[i])
    }
}

/// Scores every record against `centroids`, skipping single-member clusters.
pub fn silhouette_corpus<T: Scalar>(
    records: &[TokenRecord],
    centroids: &Centroids<T>,
    opts: SilhouetteOptions,
) -> Result<SilhouetteReport> {
    if records.is_empty() {
        return Ok(SilhouetteReport::from_tokens(Vec::new(), 0));
    }
    let mode = centroids.mode();
    let scored: Vec<Result<Option<TokenScore>>> = records
        .par_iter()
        .enumerate()
        .map_init(Vec::new, |buf: &mut Vec<T>, (i, r)| {
            let key = mode.key(r);
            let pos = centroids.position(&key).ok_or(Error::MissingKey(key))?;
            if centroids.count(pos) < 2 {
                return Ok(None);
            }
            widen_into(&r.vector, buf);
            let value = silhouette_token(buf, key, centroids, opts)?;
            Ok(Some(TokenScore {
                ordinal: i as u64,
                type_id: r.type_id,
                segment: r.segment,
                value: value.to_f64(),
            }))
        })
        .collect();
    let mut tokens = Vec::with_capacity(records.len());
    let mut skipped = 0u64;
    for s in scored {
        match s? {
            Some(t) => tokens.push(t),
            None => skipped += 1,
        }
    }
    Ok(SilhouetteReport::from_tokens(tokens, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{accumulate_centroids, KeyMode};

    fn four_point() -> Vec<TokenRecord> {
        let mk = |t, v: [f32; 2]| TokenRecord::new(t, Segment::A, 0, 0, v.to_vec());
        vec![mk(0, [0.0, 0.0]), mk(0, [0.0, 2.0]), mk(1, [10.0, 0.0]), mk(1, [10.0, 2.0])]
    }

    fn centroids_of(recs: &[TokenRecord]) -> Centroids<f64> {
        accumulate_centroids::<f64>(recs, 2, KeyMode::Type).unwrap().finalize()
    }

    #[test]
    fn silhouette_edge_values() {
        assert_eq!(SilhouetteValue::from_distances(0.0, 5.0).silh, 1.0);
        assert_eq!(SilhouetteValue::from_distances(1.0, 1.0).silh, 0.0);
        assert_eq!(SilhouetteValue::from_distances(0.0, 0.0).silh, 0.0);
        assert_eq!(SilhouetteValue::from_distances(4.0, 2.0).silh, -0.5);
    }

    #[test]
    fn equidistant_token_scores_zero() {
        let mk = |t, v: [f32; 2]| TokenRecord::new(t, Segment::A, 0, 0, v.to_vec());
        let recs = [mk(0, [0.0, 0.0]), mk(1, [2.0, 0.0])];
        let c = centroids_of(&recs);
        let s = silhouette_token(&[1.0, 0.0], ClusterKey::Type(0), &c, Default::default()).unwrap();
        assert_eq!((s.coh, s.sep, s.silh), (1.0, 1.0, 0.0));
        let at_own = silhouette_token(&[0.0, 0.0], ClusterKey::Type(0), &c, Default::default()).unwrap();
        assert_eq!((at_own.coh, at_own.silh), (0.0, 1.0));
    }

    #[test]
    fn four_point_corpus() {
        let recs = four_point();
        let c = centroids_of(&recs);
        let s = silhouette_token(&[0.0, 0.0], ClusterKey::Type(0), &c, Default::default()).unwrap();
        assert_eq!(s.coh, 1.0);
        assert!((s.sep - 101f64.sqrt()).abs() < 1e-12);
        let expect = (101f64.sqrt() - 1.0) / 101f64.sqrt();
        assert!((s.silh - expect).abs() < 1e-12);
        assert!((expect - 0.9005).abs() < 1e-4);

        let report = silhouette_corpus(&recs, &c, Default::default()).unwrap();
        assert_eq!(report.tokens.len(), 4);
        for t in &report.tokens {
            assert!((t.value.silh - expect).abs() < 1e-12);
        }
        assert_eq!(report.corpus.frac_tokens_negative, Some(0.0));
        assert_eq!(report.corpus.n_types, 2);
    }

    #[test]
    fn errors() {
        let mk = |t, v: [f32; 2]| TokenRecord::new(t, Segment::A, 0, 0, v.to_vec());
        let one = centroids_of(&[mk(0, [0.0, 0.0]), mk(0, [1.0, 1.0])]);
        assert!(matches!(
            silhouette_token(&[0.0, 0.0], ClusterKey::Type(0), &one, Default::default()),
            Err(Error::SeparationUndefined { clusters: 1 })
        ));
        let two = centroids_of(&four_point());
        assert!(matches!(
            silhouette_token(&[0.0, 0.0], ClusterKey::Type(9), &two, Default::default()),
            Err(Error::MissingKey(ClusterKey::Type(9)))
        ));
    }

    #[test]
    fn singletons_are_skipped_and_empty_is_empty() {
        let mut recs = four_point();
        recs.push(TokenRecord::new(2, Segment::A, 0, 0, vec![5.0, 5.0]));
        let c = centroids_of(&recs);
        let r = silhouette_corpus(&recs, &c, Default::default()).unwrap();
        assert_eq!(r.tokens.len(), 4);
        assert_eq!(r.skipped_singleton_tokens, 1);
        let empty = silhouette_corpus::<f64>(&[], &c, Default::default()).unwrap();
        assert_eq!(empty.corpus.n_tokens, 0);
        assert_eq!(empty.corpus.mean_silh, None);
    }

    #[test]
    fn embedded_type_goes_negative() {
        // type 1 is a wide cloud around the origin whose members mostly sit
        // next to the tight type 0 cluster
        let mk = |t, v: [f32; 2]| TokenRecord::new(t, Segment::A, 0, 0, v.to_vec());
        let mut recs = vec![mk(0, [4.5, 0.0]), mk(0, [4.5, 0.2])];
        for v in [[4.0, 0.0], [4.0, 1.0], [4.0, -1.0], [-12.0, 0.0]] {
            recs.push(mk(1, v));
        }
        recs.push(mk(2, [50.0, 50.0]));
        recs.push(mk(2, [51.0, 50.0]));
        let c = centroids_of(&recs);
        let r = silhouette_corpus(&recs, &c, Default::default()).unwrap();
        assert!(r.type_aggregate(1).unwrap().mean_silh < 0.0);
        assert!(r.type_aggregate(2).unwrap().mean_silh > 0.9);
    }

    #[test]
    fn leave_one_out_cohesion() {
        let recs = four_point();
        let c = centroids_of(&recs);
        let opts = SilhouetteOptions { leave_one_out: true };
        // other member of type 0 is (0,2): coh = 2, sep = sqrt(101)
        let s = silhouette_token(&[0.0, 0.0], ClusterKey::Type(0), &c, opts).unwrap();
        assert!((s.coh - 2.0).abs() < 1e-12);
        assert!((s.silh - (1.0 - 2.0 / 101f64.sqrt())).abs() < 1e-12);
    }
}
