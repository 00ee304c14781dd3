//! Pairwise structure: per-sentence cosine sets, the first-vs-second
//! sentence comparison, word-pair similarity and sum-composed sentence
//! relatedness.

use std::collections::BTreeMap;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{CentroidTable, KeyMode};
use crate::corpus::{RecordFilter, Segment, TokenRecord, Vocab};
use crate::error::{CorpusError, Error, Result, StatsError};
use crate::scalar::{dot, Scalar};
use crate::stats::{child_seed, cohens_d, spearman, subsample, wilcoxon_rank_sum, DVariant, Spearman, StatResult, WilcoxonMode};

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if !(nu > T::zero()) || !(nv > T::zero()) {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(u, v) / (nu * nv)).max(-T::one()).min(T::one()))
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Cosines over all unordered token pairs of one sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CosineSample {
    pub input_id: u64,
    pub segment: Segment,
    pub tokens: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CosineSets {
    pub samples: Vec<CosineSample>,
    pub zero_norm_tokens: u64,
    /// Records repeating an already seen (input, segment, position).
    pub duplicate_positions: u64,
    /// Sentences left with fewer than two tokens.
    pub short_sentences: u64,
}

impl CosineSets {
    /// All cosine values of one segment, in sample order.
    pub fn pool(&self, segment: Segment) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.segment == segment)
            .flat_map(|s| s.values.iter().copied())
            .collect()
    }
}

/// Groups accepted records into sentences keyed by (input_id, segment),
/// ordered by position. Repeated positions keep the first record.
fn group_sentences<'r>(
    records: &'r [TokenRecord],
    filter: &RecordFilter<'_>,
) -> (BTreeMap<(u64, Segment), BTreeMap<u16, &'r TokenRecord>>, u64) {
    let mut groups: BTreeMap<(u64, Segment), BTreeMap<u16, &TokenRecord>> = BTreeMap::new();
    let mut dups = 0;
    for r in records.iter().filter(|r| filter.accepts(r)) {
        let sentence = groups.entry((r.input_id, r.segment)).or_default();
        if sentence.contains_key(&r.position) {
            dups += 1;
        } else {
            sentence.insert(r.position, r);
        }
    }
    (groups, dups)
}

/// One [`CosineSample`] per sentence with at least two usable tokens.
/// Zero-norm tokens are dropped and counted.
pub fn sentence_cosine_sets(records: &[TokenRecord], filter: &RecordFilter<'_>) -> CosineSets {
    let (groups, duplicate_positions) = group_sentences(records, filter);
    let groups: Vec<_> = groups.into_iter().collect();
    let per_sentence: Vec<(Option<CosineSample>, u64)> = groups
        .par_iter()
        .map(|((input_id, segment), tokens)| {
            let mut unit = Vec::with_capacity(tokens.len());
            let mut zero = 0u64;
            for r in tokens.values() {
                let v = to_f64(&r.vector);
                let n = dot(&v, &v).sqrt();
                if n > 0.0 {
                    unit.push(v);
                } else {
                    zero += 1;
                }
            }
            if unit.len() < 2 {
                return (None, zero);
            }
            let mut values = Vec::with_capacity(unit.len() * (unit.len() - 1) / 2);
            for i in 0..unit.len() {
                for j in i + 1..unit.len() {
                    values.push(cosine(&unit[i], &unit[j]).expect("nonzero, equal dims"));
                }
            }
            let sample = CosineSample {
                input_id: *input_id,
                segment: *segment,
                tokens: unit.len(),
                values,
            };
            (Some(sample), zero)
        })
        .collect();
    let mut out = CosineSets {
        duplicate_positions,
        ..Default::default()
    };
    for (sample, zero) in per_sentence {
        out.zero_norm_tokens += zero;
        match sample {
            Some(s) => out.samples.push(s),
            None => out.short_sentences += 1,
        }
    }
    out
}

/// Subsample sizes used when none are given.
pub const DEFAULT_SAMPLE_SIZES: [usize; 4] = [1_000, 10_000, 100_000, 1_000_000];
pub const DEFAULT_REPEATS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Per-segment subsample sizes. Sizes above the smaller pool are skipped.
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub mode: WilcoxonMode,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            repeats: DEFAULT_REPEATS,
            seed: 0,
            mode: WilcoxonMode::Auto,
        }
    }
}

/// Subsampled test p-values at one size; `full` marks the whole-pool test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub size: usize,
    pub full: bool,
    pub repeats: usize,
    pub mean_p: f64,
    pub min_p: f64,
    pub max_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSegmentReport {
    /// Wilcoxon rank-sum of segment A cosines against segment B cosines.
    pub test: StatResult,
    /// Pooled Cohen's d, A minus B.
    pub cohens_d: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub curve: Vec<CurvePoint>,
    pub skipped_sizes: Vec<usize>,
}

/// Compares the pooled first-segment cosines with the second-segment ones,
/// then repeats the test on subsamples of each requested size.
pub fn cross_segment_cosine_test(sets: &CosineSets, opts: &CurveOptions) -> Result<CrossSegmentReport> {
    let a = sets.pool(Segment::A);
    let b = sets.pool(Segment::B);
    cross_pool_test(&a, &b, opts)
}

/// [`cross_segment_cosine_test`] on explicit pools.
pub fn cross_pool_test(a: &[f64], b: &[f64], opts: &CurveOptions) -> Result<CrossSegmentReport> {
    for (name, pool) in [("segment A", a), ("segment B", b)] {
        if pool.is_empty() {
            return Err(StatsError::EmptyGroup(name.into()).into());
        }
    }
    if opts.repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let test = wilcoxon_rank_sum(a, b, opts.mode)?;
    let d = cohens_d(a, b, DVariant::Pooled)?;
    let mut test = test;
    test.effect_size = Some(d);

    let limit = a.len().min(b.len());
    let mut curve = Vec::new();
    let mut skipped_sizes = Vec::new();
    for (k, &size) in opts.sizes.iter().enumerate() {
        if size == 0 || size > limit {
            skipped_sizes.push(size);
            continue;
        }
        let stream = child_seed(opts.seed, k as u64);
        let ps: Vec<f64> = (0..opts.repeats as u64)
            .into_par_iter()
            .map(|rep| -> std::result::Result<f64, StatsError> {
                let sa = subsample(a, size, child_seed(stream, 2 * rep))?;
                let sb = subsample(b, size, child_seed(stream, 2 * rep + 1))?;
                match wilcoxon_rank_sum(&sa, &sb, opts.mode) {
                    Ok(r) => Ok(r.p_value),
                    // identical subsamples carry no evidence either way
                    Err(StatsError::AllTied) => Ok(1.0),
                    Err(e) => Err(e),
                }
            })
            .collect::<std::result::Result<_, _>>()?;
        curve.push(CurvePoint {
            size,
            full: false,
            repeats: ps.len(),
            mean_p: ps.iter().sum::<f64>() / ps.len() as f64,
            min_p: ps.iter().copied().fold(f64::INFINITY, f64::min),
            max_p: ps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    curve.push(CurvePoint {
        size: a.len().max(b.len()),
        full: true,
        repeats: 1,
        mean_p: test.p_value,
        min_p: test.p_value,
        max_p: test.p_value,
    });
    Ok(CrossSegmentReport {
        test,
        cohens_d: d,
        n_a: a.len(),
        n_b: b.len(),
        curve,
        skipped_sizes,
    })
}

/// Mean vector of every type, keyed by surface form. Types sharing a
/// surface are merged.
pub fn type_average_embeddings<T: Scalar>(table: &CentroidTable<T>, vocab: &Vocab) -> Result<BTreeMap<String, Vec<T>>> {
    if table.mode() != KeyMode::Type {
        return Err(Error::InvalidParameter("type averages need a table keyed by type".into()));
    }
    let mut sums: BTreeMap<String, (Vec<T>, u64)> = BTreeMap::new();
    for (key, e) in table.iter() {
        let Some(surface) = vocab.surface(key.type_id()) else {
            continue;
        };
        let acc = sums
            .entry(surface.to_string())
            .or_insert_with(|| (vec![T::zero(); table.dim()], 0));
        crate::scalar::add_assign(&mut acc.0, &e.sum);
        acc.1 += e.count;
    }
    Ok(sums
        .into_iter()
        .map(|(s, (sum, n))| {
            let n = T::cast(n);
            (s, sum.into_iter().map(|x| x / n).collect())
        })
        .collect())
}

fn table_err(file: &'static str, line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Table {
        file,
        line,
        message: message.into(),
    }
}

/// Splits a TSV line; `None` for blank lines and `#` comments.
fn tsv_fields(line: &str) -> Option<Vec<&str>> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() || line.starts_with('#') {
        None
    } else {
        Some(line.split('\t').collect())
    }
}

fn parse_gold(file: &'static str, line: usize, s: &str) -> Result<f64, CorpusError> {
    let g: f64 = s
        .trim()
        .parse()
        .map_err(|_| table_err(file, line, format!("score {s:?} is not a number")))?;
    if !g.is_finite() {
        return Err(table_err(file, line, "score is not finite"));
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
}

/// Word-pair similarity ratings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairBenchmark {
    pub rows: Vec<PairRow>,
}

impl PairBenchmark {
    /// Reads `word1\tword2\tscore` lines. A first line whose score does not
    /// parse is taken as a header.
    pub fn read_tsv<R: BufRead>(src: R) -> Result<Self, CorpusError> {
        const FILE: &str = "pair benchmark";
        let mut rows = Vec::new();
        let mut first = true;
        for (i, line) in src.lines().enumerate() {
            let line = line?;
            let Some(f) = tsv_fields(&line) else { continue };
            let first_line = std::mem::replace(&mut first, false);
            if f.len() != 3 {
                return Err(table_err(FILE, i + 1, format!("expected 3 fields, found {}", f.len())));
            }
            let gold = match parse_gold(FILE, i + 1, f[2]) {
                Ok(g) => g,
                Err(_) if first_line => continue,
                Err(e) => return Err(e),
            };
            let (w1, w2) = (f[0].trim(), f[1].trim());
            if w1.is_empty() || w2.is_empty() {
                return Err(table_err(FILE, i + 1, "empty word"));
            }
            rows.push(PairRow {
                word1: w1.to_string(),
                word2: w2.to_string(),
                gold,
            });
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePairRow {
    pub id: u64,
    pub sentence1: String,
    pub sentence2: String,
    pub gold: f64,
}

/// Sentence-pair relatedness ratings. The text is kept for reference; the
/// vectors come from the corpus records of each id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentencePairBenchmark {
    pub rows: Vec<SentencePairRow>,
}

impl SentencePairBenchmark {
    /// Reads `id\tsentence1\tsentence2\tscore` lines, with an optional header.
    pub fn read_tsv<R: BufRead>(src: R) -> Result<Self, CorpusError> {
        const FILE: &str = "sentence benchmark";
        let mut rows = Vec::new();
        let mut first = true;
        for (i, line) in src.lines().enumerate() {
            let line = line?;
            let Some(f) = tsv_fields(&line) else { continue };
            let first_line = std::mem::replace(&mut first, false);
            if f.len() != 4 {
                return Err(table_err(FILE, i + 1, format!("expected 4 fields, found {}", f.len())));
            }
            let id = match f[0].trim().parse::<u64>() {
                Ok(id) => id,
                Err(_) if first_line => continue,
                Err(_) => return Err(table_err(FILE, i + 1, format!("id {:?} is not an integer", f[0]))),
            };
            let gold = parse_gold(FILE, i + 1, f[3])?;
            if f[1].trim().is_empty() || f[2].trim().is_empty() {
                return Err(table_err(FILE, i + 1, "empty sentence"));
            }
            rows.push(SentencePairRow {
                id,
                sentence1: f[1].to_string(),
                sentence2: f[2].to_string(),
                gold,
            });
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub spearman: Spearman,
    pub used: usize,
    pub skipped: usize,
}

/// Spearman correlation between gold ratings and the cosine of the two
/// words' vectors. Pairs with a missing or zero-norm vector are skipped.
pub fn word_similarity_correlation<T: Scalar>(
    vectors: &BTreeMap<String, Vec<T>>,
    bench: &PairBenchmark,
) -> Result<CorrelationReport> {
    let mut cos = Vec::new();
    let mut gold = Vec::new();
    for row in &bench.rows {
        let (Some(u), Some(v)) = (vectors.get(&row.word1), vectors.get(&row.word2)) else {
            continue;
        };
        match cosine(u, v) {
            Ok(c) => {
                cos.push(c.to_f64_lossy());
                gold.push(row.gold);
            }
            Err(Error::ZeroNorm) => {}
            Err(e) => return Err(e),
        }
    }
    if cos.len() < 3 {
        return Err(StatsError::InsufficientData {
            needed: 3,
            found: cos.len(),
        }
        .into());
    }
    Ok(CorrelationReport {
        spearman: spearman(&cos, &gold)?,
        used: cos.len(),
        skipped: bench.rows.len() - cos.len(),
    })
}

/// Componentwise sum, accumulated in f64 and returned in storage precision.
pub fn sum_compose<'r, I>(records: I) -> Result<Vec<f32>>
where
    I: IntoIterator<Item = &'r TokenRecord>,
{
    let mut acc: Option<Vec<f64>> = None;
    for r in records {
        let a = acc.get_or_insert_with(|| vec![0.0; r.vector.len()]);
        if a.len() != r.vector.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: r.vector.len(),
            });
        }
        crate::scalar::add_assign(a, &r.vector);
    }
    acc.map(|a| a.into_iter().map(|x| x as f32).collect())
        .ok_or(Error::Empty("sentence after filtering"))
}

/// How benchmark rows map onto corpus inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputScheme {
    /// Both sentences in one input: `input_id = id`, segment A is the first
    /// sentence and segment B the second.
    #[default]
    Pair,
    /// Each sentence on its own: inputs `2 * id` and `2 * id + 1`, segment A.
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposedPair {
    pub id: u64,
    pub left: Vec<f32>,
    pub right: Vec<f32>,
    pub gold: f64,
}

/// Sum-composes both sentences of every benchmark row from `records`.
/// Returns the composed rows and the number of rows lacking a side.
pub fn compose_benchmark(
    bench: &SentencePairBenchmark,
    records: &[TokenRecord],
    filter: &RecordFilter<'_>,
    scheme: InputScheme,
) -> Result<(Vec<ComposedPair>, usize)> {
    let (groups, _) = group_sentences(records, filter);
    let side = |key: (u64, Segment)| -> Result<Option<Vec<f32>>> {
        match groups.get(&key) {
            Some(s) if !s.is_empty() => sum_compose(s.values().copied()).map(Some),
            _ => Ok(None),
        }
    };
    let mut rows = Vec::with_capacity(bench.rows.len());
    let mut missing = 0;
    for row in &bench.rows {
        let (k1, k2) = match scheme {
            InputScheme::Pair => ((row.id, Segment::A), (row.id, Segment::B)),
            InputScheme::Single => ((2 * row.id, Segment::A), (2 * row.id + 1, Segment::A)),
        };
        match (side(k1)?, side(k2)?) {
            (Some(left), Some(right)) => rows.push(ComposedPair {
                id: row.id,
                left,
                right,
                gold: row.gold,
            }),
            _ => missing += 1,
        }
    }
    Ok((rows, missing))
}

/// Spearman correlation between gold relatedness and the cosine of the two
/// composed vectors. Rows with a zero-norm side are skipped.
pub fn sentence_relatedness_correlation(rows: &[ComposedPair]) -> Result<CorrelationReport> {
    let mut cos = Vec::with_capacity(rows.len());
    let mut gold = Vec::with_capacity(rows.len());
    for row in rows {
        match cosine(&to_f64(&row.left), &to_f64(&row.right)) {
            Ok(c) => {
                cos.push(c);
                gold.push(row.gold);
            }
            Err(Error::ZeroNorm) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(CorrelationReport {
        spearman: spearman(&cos, &gold)?,
        used: cos.len(),
        skipped: rows.len() - cos.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::accumulate_centroids;
    use crate::corpus::VocabEntry;
    use proptest::prelude::*;

    fn rec(input: u64, seg: Segment, pos: u16, v: Vec<f32>) -> TokenRecord {
        TokenRecord::new(0, seg, input, pos, v)
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0f64, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(cosine(&[0.0f64, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
        assert!(cosine(&[1.0f64], &[1.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_scale_invariant_bounded(
            u in prop::collection::vec(-10.0f64..10.0, 4),
            v in prop::collection::vec(-10.0f64..10.0, 4),
            s in 0.01f64..100.0,
        ) {
            prop_assume!(dot(&u, &u) > 1e-6 && dot(&v, &v) > 1e-6);
            let c = cosine(&u, &v).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert_eq!(c, cosine(&v, &u).unwrap());
            let scaled: Vec<f64> = u.iter().map(|x| x * s).collect();
            prop_assert!((cosine(&scaled, &v).unwrap() - c).abs() < 1e-12);
        }
    }

    #[test]
    fn sentence_sets_counts_and_values() {
        let recs = vec![
            rec(0, Segment::A, 0, vec![1.0, 0.0]),
            rec(0, Segment::A, 1, vec![0.0, 1.0]),
            rec(0, Segment::A, 2, vec![1.0, 1.0]),
            rec(0, Segment::B, 3, vec![1.0, 0.0]),
            rec(1, Segment::A, 0, vec![0.0, 0.0]),
            rec(1, Segment::A, 1, vec![2.0, 0.0]),
        ];
        let sets = sentence_cosine_sets(&recs, &RecordFilter::pass_all());
        assert_eq!(sets.samples.len(), 1);
        assert_eq!(sets.short_sentences, 2);
        assert_eq!(sets.zero_norm_tokens, 1);
        let mut v = sets.samples[0].values.clone();
        v.sort_by(f64::total_cmp);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(v[0], 0.0);
        assert!((v[1] - h).abs() < 1e-15 && (v[2] - h).abs() < 1e-15);
    }

    #[test]
    fn duplicated_records_give_identical_sample() {
        let base: Vec<_> = (0..5u16).map(|p| rec(3, Segment::B, p, vec![p as f32 + 1.0, 1.0 - p as f32])).collect();
        let mut doubled = base.clone();
        doubled.extend(base.iter().cloned());
        let a = sentence_cosine_sets(&base, &RecordFilter::pass_all());
        let b = sentence_cosine_sets(&doubled, &RecordFilter::pass_all());
        assert_eq!(a.samples, b.samples);
        assert_eq!(b.duplicate_positions, 5);
        assert_eq!(a.samples[0].values.len(), 10);
    }

    #[test]
    fn cross_test_needs_both_segments() {
        let sets = CosineSets {
            samples: vec![CosineSample {
                input_id: 0,
                segment: Segment::A,
                tokens: 2,
                values: vec![0.5],
            }],
            ..Default::default()
        };
        let err = cross_segment_cosine_test(&sets, &CurveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Stats(StatsError::EmptyGroup(_))));
    }

    #[test]
    fn curve_skips_oversized_and_is_deterministic() {
        let a: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.53).cos()).collect();
        let opts = CurveOptions {
            sizes: vec![10, 100, 1000],
            repeats: 5,
            seed: 11,
            mode: WilcoxonMode::Auto,
        };
        let r1 = cross_pool_test(&a, &b, &opts).unwrap();
        let r2 = cross_pool_test(&a, &b, &opts).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.skipped_sizes, vec![1000]);
        assert_eq!(r1.curve.len(), 3);
        assert!(r1.curve.last().unwrap().full);
        for p in &r1.curve {
            assert!(p.min_p <= p.mean_p && p.mean_p <= p.max_p);
        }
    }

    #[test]
    fn type_averages_follow_vocab() {
        let vocab = Vocab::new(vec![VocabEntry::new("cat", 2), VocabEntry::new("dog", 0)]);
        let recs = vec![
            TokenRecord::new(0, Segment::A, 0, 0, vec![0.0, 0.0]),
            TokenRecord::new(0, Segment::B, 0, 1, vec![0.0, 2.0]),
        ];
        let t = accumulate_centroids::<f64>(&recs, 2, KeyMode::Type).unwrap();
        let m = type_average_embeddings(&t, &vocab).unwrap();
        assert_eq!(m.get("cat"), Some(&vec![0.0, 1.0]));
        assert!(!m.contains_key("dog"));
    }

    fn vectors() -> BTreeMap<String, Vec<f64>> {
        // angles 0, 20, 40, 60, 80 degrees from the first axis
        (0..5)
            .map(|i| {
                let a = (i as f64 * 20.0).to_radians();
                (format!("w{i}"), vec![a.cos(), a.sin()])
            })
            .collect()
    }

    #[test]
    fn word_similarity_monotone_and_skips() {
        let v = vectors();
        let mut bench = PairBenchmark::default();
        for j in 1..5 {
            bench.rows.push(PairRow {
                word1: "w0".into(),
                word2: format!("w{j}"),
                gold: 10.0 - j as f64,
            });
        }
        bench.rows.push(PairRow {
            word1: "w0".into(),
            word2: "absent".into(),
            gold: 1.0,
        });
        let r = word_similarity_correlation(&v, &bench).unwrap();
        assert_eq!((r.spearman.rho, r.used, r.skipped), (1.0, 4, 1));
        for row in &mut bench.rows {
            row.gold = -row.gold.powi(3);
        }
        assert_eq!(word_similarity_correlation(&v, &bench).unwrap().spearman.rho, -1.0);
        bench.rows.truncate(2);
        assert!(matches!(
            word_similarity_correlation(&v, &bench),
            Err(Error::Stats(StatsError::InsufficientData { .. }))
        ));
    }

    #[test]
    fn sum_compose_examples() {
        let a = rec(0, Segment::A, 0, vec![1.0, 0.0]);
        let b = rec(0, Segment::A, 1, vec![0.0, 1.0]);
        assert_eq!(sum_compose([&a, &b]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(sum_compose([&b, &a]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(sum_compose([&a]).unwrap(), a.vector);
        assert!(sum_compose(std::iter::empty()).is_err());
    }

    #[test]
    fn benchmarks_parse() {
        let men = "word1\tword2\tscore\ncat\tdog\t7.5\n# note\n\nsun\tmoon\t3\n";
        let b = PairBenchmark::read_tsv(men.as_bytes()).unwrap();
        assert_eq!(b.rows.len(), 2);
        assert_eq!(b.rows[1].gold, 3.0);
        assert!(PairBenchmark::read_tsv("a\tb\t1\nc\td\tx\n".as_bytes()).is_err());
        assert!(PairBenchmark::read_tsv("a\tb\n".as_bytes()).is_err());
        let sts = "id\ts1\ts2\tscore\n4\tA man.\tA dog.\t1.5\n";
        let s = SentencePairBenchmark::read_tsv(sts.as_bytes()).unwrap();
        assert_eq!(s.rows[0].id, 4);
        assert!(SentencePairBenchmark::read_tsv("1\t\tx\t2\n".as_bytes()).is_err());
    }

    #[test]
    fn composition_schemes() {
        let bench = SentencePairBenchmark {
            rows: vec![
                SentencePairRow { id: 0, sentence1: "a".into(), sentence2: "b".into(), gold: 1.0 },
                SentencePairRow { id: 1, sentence1: "c".into(), sentence2: "d".into(), gold: 2.0 },
            ],
        };
        let pair = vec![
            rec(0, Segment::A, 0, vec![1.0, 0.0]),
            rec(0, Segment::A, 1, vec![1.0, 0.0]),
            rec(0, Segment::B, 2, vec![0.0, 1.0]),
        ];
        let (rows, missing) = compose_benchmark(&bench, &pair, &RecordFilter::pass_all(), InputScheme::Pair).unwrap();
        assert_eq!(missing, 1);
        assert_eq!(rows[0].left, vec![2.0, 0.0]);
        assert_eq!(rows[0].right, vec![0.0, 1.0]);
        let single = vec![rec(2, Segment::A, 0, vec![1.0, 1.0]), rec(3, Segment::A, 0, vec![1.0, 0.0])];
        let (rows, missing) = compose_benchmark(&bench, &single, &RecordFilter::pass_all(), InputScheme::Single).unwrap();
        assert_eq!((rows.len(), missing, rows[0].id), (1, 1, 1));
    }

    #[test]
    fn relatedness_ties_and_zero_norm() {
        let mk = |i: usize, gold: f64| ComposedPair {
            id: i as u64,
            left: vec![1.0, 0.0],
            right: vec![(i as f32 * 0.3).cos(), (i as f32 * 0.3).sin()],
            gold,
        };
        let rows: Vec<_> = (0..5).map(|i| mk(i, -(i as f64))).collect();
        assert_eq!(sentence_relatedness_correlation(&rows).unwrap().spearman.rho, 1.0);
        let mut flat: Vec<_> = (0..5).map(|i| mk(i, 3.0)).collect();
        flat.push(ComposedPair { id: 9, left: vec![0.0, 0.0], right: vec![1.0, 0.0], gold: 1.0 });
        let r = sentence_relatedness_correlation(&flat).unwrap();
        assert!(r.spearman.all_tied);
        assert_eq!((r.spearman.rho, r.skipped), (0.0, 1));
    }
}
