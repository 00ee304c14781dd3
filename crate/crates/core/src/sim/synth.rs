use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stack::{forward, normal, StackConfig, TokenInput};
use crate::corpus::{Segment, SpecialKind, TokenRecord, Vocab, VocabEntry};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::stats::{child_seed, seeded_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityOptions {
    pub n_per_segment: usize,
    /// Standard deviation of the random word and position vectors.
    pub input_sd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparabilityReport {
    /// Held-out accuracy of a threshold on the projection onto mean_A - mean_B.
    pub accuracy: f64,
    /// Distance between the segment means of all outputs.
    pub centroid_distance: f64,
    /// The fitted direction was zero; accuracy is reported as 0.5.
    pub degenerate: bool,
    pub n_per_segment: usize,
}

/// Runs random inputs tagged with `seg_a` or `seg_b` through the stack and
/// measures how well the outputs split by segment. The direction and
/// threshold are fitted on even-indexed tokens and scored on odd ones.
pub fn segment_separability<T: Scalar>(
    stack: &StackConfig<T>,
    seg_a: &[T],
    seg_b: &[T],
    opts: &SeparabilityOptions,
) -> Result<SeparabilityReport> {
    if opts.n_per_segment < 2 {
        return Err(Error::Empty("separability sample (need at least 2 tokens per segment)"));
    }
    let dim = stack.dim;
    let run = |seg: &[T], stream: u64| -> Result<Vec<Vec<f64>>> {
        (0..opts.n_per_segment as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = seeded_rng(child_seed(child_seed(opts.seed, stream), i));
                let mut draw = || (0..dim).map(|_| T::cast(opts.input_sd * normal(&mut rng))).collect::<Vec<T>>();
                let token = TokenInput {
                    word: draw(),
                    position: draw(),
                    segment: seg.to_vec(),
                };
                let (out, _) = forward(stack, &token)?;
                Ok(out.iter().map(|v| v.to_f64_lossy()).collect())
            })
            .collect()
    };
    let a = run(seg_a, 0)?;
    let b = run(seg_b, 1)?;

    let mean_of = |rows: &mut dyn Iterator<Item = &Vec<f64>>| -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        let mut n = 0.0;
        for r in rows {
            for (s, v) in acc.iter_mut().zip(r) {
                *s += v;
            }
            n += 1.0;
        }
        acc.iter().map(|s| s / n).collect()
    };
    let all_a = mean_of(&mut a.iter());
    let all_b = mean_of(&mut b.iter());
    let centroid_distance = crate::scalar::euclidean(&all_a, &all_b);

    let train_a = mean_of(&mut a.iter().step_by(2));
    let train_b = mean_of(&mut b.iter().step_by(2));
    let dir: Vec<f64> = train_a.iter().zip(&train_b).map(|(x, y)| x - y).collect();
    let n_test = a.iter().skip(1).step_by(2).count() + b.iter().skip(1).step_by(2).count();
    if !(dot(&dir, &dir) > 0.0) {
        return Ok(SeparabilityReport {
            accuracy: 0.5,
            centroid_distance,
            degenerate: true,
            n_per_segment: opts.n_per_segment,
        });
    }
    let mid: Vec<f64> = train_a.iter().zip(&train_b).map(|(x, y)| (x + y) / 2.0).collect();
    let threshold = dot(&dir, &mid);
    let correct = a.iter().skip(1).step_by(2).filter(|v| dot(&dir, v) > threshold).count()
        + b.iter().skip(1).step_by(2).filter(|v| dot(&dir, v) <= threshold).count();
    Ok(SeparabilityReport {
        accuracy: correct as f64 / n_test as f64,
        centroid_distance,
        degenerate: false,
        n_per_segment: opts.n_per_segment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_types: usize,
    pub tokens_per_type: usize,
    pub dim: usize,
    /// Standard deviation of the type centroids around the origin.
    pub centroid_spread: f64,
    /// Within-type noise standard deviation.
    pub noise_sd: f64,
    /// Offset added to every segment B token along `direction`.
    pub delta: f64,
    /// Offset direction, normalized on use; the first axis when absent.
    pub direction: Option<Vec<f64>>,
    pub tokens_per_sentence: usize,
    /// Add a CLS token at the start of each input and a SEP after each sentence.
    pub specials: bool,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n_types: 100,
            tokens_per_type: 20,
            dim: 16,
            centroid_spread: 1.0,
            noise_sd: 1.0,
            delta: 0.5,
            direction: None,
            tokens_per_sentence: 10,
            specials: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub dim: usize,
    pub records: Vec<TokenRecord>,
    pub vocab: Vocab,
}

/// Gaussian type clusters with a fixed offset on segment B.
///
/// Token k of each type goes to segment A when k is even and B otherwise.
/// Segment A tokens are dealt into sentences in (k, type) order, likewise
/// segment B; the i-th A sentence and the i-th B sentence form input i.
/// Each type draws from its own child seed.
pub fn gen_synthetic_corpus(p: &SyntheticParams) -> Result<SyntheticCorpus> {
    if p.n_types < 2 {
        return Err(Error::InvalidParameter("need at least 2 types".into()));
    }
    if p.tokens_per_type == 0 || p.dim == 0 || p.tokens_per_sentence == 0 {
        return Err(Error::InvalidParameter(
            "tokens_per_type, dim and tokens_per_sentence must be positive".into(),
        ));
    }
    if p.tokens_per_sentence > (u16::MAX as usize - 3) / 2 {
        return Err(Error::InvalidParameter("tokens_per_sentence too large for u16 positions".into()));
    }
    for (name, v) in [("centroid_spread", p.centroid_spread), ("noise_sd", p.noise_sd)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative")));
        }
    }
    if !(p.delta >= 0.0 && p.delta.is_finite()) {
        return Err(Error::InvalidParameter("delta must be finite and nonnegative".into()));
    }
    let u = unit_direction(p.direction.as_deref(), p.dim)?;
    let n_types = u32::try_from(p.n_types).map_err(|_| Error::InvalidParameter("too many types".into()))?;

    // per-type vectors, token k at index k
    let vectors: Vec<Vec<Vec<f32>>> = (0..n_types)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(child_seed(p.seed, t as u64));
            let centroid: Vec<f64> = (0..p.dim).map(|_| p.centroid_spread * normal(&mut rng)).collect();
            (0..p.tokens_per_type)
                .map(|k| {
                    let shift = if k % 2 == 1 { p.delta } else { 0.0 };
                    centroid
                        .iter()
                        .zip(&u)
                        .map(|(&c, &ud)| (c + p.noise_sd * normal(&mut rng) + shift * ud) as f32)
                        .collect()
                })
                .collect()
        })
        .collect();

    let order = |parity: usize| -> Vec<(u32, usize)> {
        (parity..p.tokens_per_type)
            .step_by(2)
            .flat_map(|k| (0..n_types).map(move |t| (t, k)))
            .collect()
    };
    let seg_a = order(0);
    let seg_b = order(1);
    let a_sent: Vec<_> = seg_a.chunks(p.tokens_per_sentence).collect();
    let b_sent: Vec<_> = seg_b.chunks(p.tokens_per_sentence).collect();

    let mut vocab = Vocab::new((0..n_types).map(|t| VocabEntry::new(format!("w{t}"), p.tokens_per_type as u64)).collect());
    let specials = if p.specials {
        let inputs = a_sent.len().max(b_sent.len()) as u64;
        let seps = (a_sent.len() + b_sent.len()) as u64;
        let cls = vocab.push(VocabEntry::new("[CLS]", inputs).with_special(SpecialKind::Cls));
        let sep = vocab.push(VocabEntry::new("[SEP]", seps).with_special(SpecialKind::Sep));
        let mut rng = seeded_rng(child_seed(p.seed, u64::MAX));
        let cls_v: Vec<f32> = (0..p.dim).map(|_| normal(&mut rng) as f32).collect();
        let sep_v: Vec<f32> = (0..p.dim).map(|_| normal(&mut rng) as f32).collect();
        Some(((cls, cls_v), (sep, sep_v)))
    } else {
        None
    };

    let mut records = Vec::with_capacity(p.n_types * p.tokens_per_type + 3 * a_sent.len().max(b_sent.len()));
    for i in 0..a_sent.len().max(b_sent.len()) {
        let input_id = i as u64;
        let mut pos: u16 = 0;
        for (seg, sent) in [(Segment::A, a_sent.get(i)), (Segment::B, b_sent.get(i))] {
            let Some(sent) = sent else { continue };
            if let (Segment::A, Some(((cls, v), _))) = (seg, &specials) {
                records.push(TokenRecord::new(*cls, seg, input_id, pos, v.clone()));
                pos += 1;
            }
            for &(t, k) in sent.iter() {
                records.push(TokenRecord::new(t, seg, input_id, pos, vectors[t as usize][k].clone()));
                pos += 1;
            }
            if let Some((_, (sep, v))) = &specials {
                records.push(TokenRecord::new(*sep, seg, input_id, pos, v.clone()));
                pos += 1;
            }
        }
    }
    Ok(SyntheticCorpus {
        dim: p.dim,
        records,
        vocab,
    })
}

fn unit_direction(direction: Option<&[f64]>, dim: usize) -> Result<Vec<f64>> {
    match direction {
        None => {
            let mut u = vec![0.0; dim];
            u[0] = 1.0;
            Ok(u)
        }
        Some(d) => {
            if d.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: d.len(),
                });
            }
            let n = dot(d, d).sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::ZeroNorm);
            }
            Ok(d.iter().map(|x| x / n).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SubLayerKind;

    #[test]
    fn separability_null_and_strong() {
        let stack = StackConfig::<f64>::random(2, 8, SubLayerKind::Identity, 1).unwrap();
        let seg = vec![0.2; 8];
        let opts = SeparabilityOptions {
            n_per_segment: 1000,
            input_sd: 1.0,
            seed: 5,
        };
        let null = segment_separability(&stack, &seg, &seg, &opts).unwrap();
        assert!((null.accuracy - 0.5).abs() < 0.05, "{}", null.accuracy);

        let mut sa = vec![0.0; 8];
        let mut sb = vec![0.0; 8];
        for d in 0..8 {
            sa[d] = if d % 2 == 0 { 5.0 } else { -5.0 };
            sb[d] = -sa[d];
        }
        let opts = SeparabilityOptions {
            input_sd: 0.2,
            ..opts
        };
        let strong = segment_separability(&stack, &sa, &sb, &opts).unwrap();
        assert!(strong.accuracy >= 0.95, "{}", strong.accuracy);
        assert!(strong.centroid_distance > 0.0);
    }

    #[test]
    fn separability_needs_tokens() {
        let stack = StackConfig::<f64>::plain(1, 4, SubLayerKind::Zero).unwrap();
        let opts = SeparabilityOptions {
            n_per_segment: 0,
            input_sd: 1.0,
            seed: 0,
        };
        assert!(matches!(
            segment_separability(&stack, &[0.0; 4], &[1.0; 4], &opts),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn generator_layout() {
        let p = SyntheticParams {
            n_types: 3,
            tokens_per_type: 4,
            dim: 2,
            tokens_per_sentence: 2,
            specials: true,
            ..Default::default()
        };
        let c = gen_synthetic_corpus(&p).unwrap();
        // 12 content tokens, 3 inputs, 1 CLS + 2 SEP each
        assert_eq!(c.records.len(), 12 + 9);
        assert_eq!(c.vocab.len(), 5);
        assert_eq!(c.records[0].type_id, 3);
        for input in 0..3u64 {
            let recs: Vec<_> = c.records.iter().filter(|r| r.input_id == input).collect();
            let positions: Vec<u16> = recs.iter().map(|r| r.position).collect();
            assert_eq!(positions, (0..7).collect::<Vec<_>>());
            // A tokens come before B tokens
            let first_b = recs.iter().position(|r| r.segment == Segment::B).unwrap();
            assert!(recs[first_b..].iter().all(|r| r.segment == Segment::B));
        }
        for t in 0..3u32 {
            let segs: Vec<_> = c.records.iter().filter(|r| r.type_id == t).map(|r| r.segment).collect();
            assert_eq!(segs.iter().filter(|&&s| s == Segment::A).count(), 2);
            assert_eq!(segs.len(), 4);
        }
    }

    #[test]
    fn generator_deterministic_and_checked() {
        let p = SyntheticParams::default();
        assert_eq!(gen_synthetic_corpus(&p).unwrap(), gen_synthetic_corpus(&p).unwrap());
        let other = SyntheticParams { seed: 1, ..p.clone() };
        assert_ne!(gen_synthetic_corpus(&other).unwrap().records, gen_synthetic_corpus(&p).unwrap().records);
        assert!(gen_synthetic_corpus(&SyntheticParams { n_types: 1, ..p.clone() }).is_err());
        assert!(gen_synthetic_corpus(&SyntheticParams { delta: -1.0, ..p.clone() }).is_err());
        assert!(gen_synthetic_corpus(&SyntheticParams { direction: Some(vec![0.0; 16]), ..p }).is_err());
    }

    #[test]
    fn offset_lands_on_segment_b() {
        let p = SyntheticParams {
            n_types: 2,
            tokens_per_type: 2,
            dim: 3,
            noise_sd: 0.0,
            delta: 2.0,
            direction: Some(vec![0.0, 3.0, 0.0]),
            ..Default::default()
        };
        let c = gen_synthetic_corpus(&p).unwrap();
        for t in 0..2 {
            let a = c.records.iter().find(|r| r.type_id == t && r.segment == Segment::A).unwrap();
            let b = c.records.iter().find(|r| r.type_id == t && r.segment == Segment::B).unwrap();
            let diff: Vec<f32> = b.vector.iter().zip(&a.vector).map(|(x, y)| x - y).collect();
            assert_eq!(diff, vec![0.0, 2.0, 0.0]);
        }
    }
}
