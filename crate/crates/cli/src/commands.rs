use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use cohaudit::cluster::{
    accumulate_centroids_par, cohesion_vs_separation_test, group_contrast, per_type_rows, regress_silhouette,
    silhouette_corpus, KeyMode, SilhouetteOptions,
};
use cohaudit::corpus::{
    read_all, validate as validate_corpus, write_corpus, FilterPolicy, ReadMode, RecordFilter, Segment, SegmentSet,
    TokenRecord, TypeIndex, Vocab,
};
use cohaudit::pairwise::{
    compose_benchmark, cross_segment_cosine_test, sentence_cosine_sets, sentence_relatedness_correlation,
    type_average_embeddings, word_similarity_correlation, CurveOptions, InputScheme, PairBenchmark,
    SentencePairBenchmark, DEFAULT_REPEATS, DEFAULT_SAMPLE_SIZES,
};
use cohaudit::segment::{frequency_effect, segment_mse_pairs, segment_shift_test, ReferenceMode};
use cohaudit::sim::{
    accumulated_segment_term, expand_layer, forward, gen_synthetic_corpus, segment_separability,
    SeparabilityOptions, StackConfig, SubLayerKind, SyntheticParams, TokenInput,
};
use cohaudit::stats::{child_seed, seeded_rng, WilcoxonMode};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use crate::config::{parse_enum, pick};
use crate::report::{num, CliError, Output, Table};
use crate::{
    CorpusArgs, CosinesArgs, Globals, ReferenceArg, SchemeArg, SegmentsArg, SegshiftArgs, SentsimArgs,
    SilhouetteArgs, SimulateArgs, ValidateArgs, WilcoxonArg, WordsimArgs,
};

type CmdResult = Result<(Value, Output), CliError>;

/// Tolerance for the layer identities checked by `simulate`.
const IDENTITY_TOL: f64 = 1e-10;

fn open(path: &Path, what: &str) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(format!("cannot open {what} {}: {e}", path.display())))
}

fn json_of<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Records that survived filtering, plus what was needed to filter them.
struct Input {
    records: Vec<TokenRecord>,
    dim: usize,
    vocab: Option<Vocab>,
    read: u64,
    skipped_bad: usize,
    filtered_out: u64,
}

impl Input {
    fn summary(&self) -> Value {
        json!({
            "dim": self.dim,
            "records_read": self.read,
            "records_skipped_bad": self.skipped_bad,
            "records_filtered_out": self.filtered_out,
            "records_used": self.records.len(),
        })
    }
}

fn load(g: &Globals, a: &CorpusArgs, vocab_required: bool) -> Result<(Input, Value), CliError> {
    let f = &g.file;
    let vocab_path = a.vocab.clone().or_else(|| f.vocab.clone());
    let keep_specials = pick(a.keep_specials, f.keep_specials, false);
    let keep_sep = pick(a.keep_sep, f.keep_sep, false);
    let min_type_count = pick(a.min_type_count, f.min_type_count, 0);
    let segments = match a.segments {
        Some(s) => s,
        None => parse_enum::<SegmentsArg>("segments", f.segments.clone())?.unwrap_or(SegmentsArg::Both),
    };
    let skip_bad = pick(a.skip_bad_records, f.skip_bad_records, false);

    if vocab_required && vocab_path.is_none() {
        return Err(CliError::usage("--vocab is required for this command"));
    }
    let vocab = match &vocab_path {
        Some(p) => Some(Vocab::read_tsv(open(p, "vocabulary")?)?),
        None => None,
    };
    let mode = if skip_bad { ReadMode::Skip } else { ReadMode::Strict };
    let loaded = read_all(open(&a.corpus, "corpus")?, mode).map_err(|e| CliError::from(e).context(&a.corpus.display().to_string()))?;
    let dim = loaded.dim();
    let read = loaded.records.len() as u64 + loaded.skipped.len() as u64;

    let index = (min_type_count > 1).then(|| TypeIndex::from_records(&loaded.records));
    let policy = FilterPolicy {
        exclude_special: !keep_specials,
        keep_sep,
        min_type_count,
        segments: match segments {
            SegmentsArg::A => SegmentSet::only(Segment::A),
            SegmentsArg::B => SegmentSet::only(Segment::B),
            SegmentsArg::Both => SegmentSet::ALL,
        },
    };
    let filter = RecordFilter::new(policy, vocab.as_ref(), index.as_ref())?;
    let mut records = loaded.records;
    records.retain(|r| filter.accepts(r));
    let filtered_out = read - loaded.skipped.len() as u64 - records.len() as u64;

    let config = json!({
        "corpus": a.corpus,
        "vocab": vocab_path,
        "keep_specials": keep_specials,
        "keep_sep": keep_sep,
        "min_type_count": min_type_count,
        "segments": format!("{segments:?}").to_lowercase(),
        "skip_bad_records": skip_bad,
        "seed": g.seed,
        "threads": g.threads,
    });
    let input = Input {
        records,
        dim,
        vocab,
        read,
        skipped_bad: loaded.skipped.len(),
        filtered_out,
    };
    Ok((input, config))
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn surface(vocab: Option<&Vocab>, type_id: u32) -> String {
    vocab.and_then(|v| v.surface(type_id)).unwrap_or("").to_string()
}

fn segment_tag(s: Segment) -> &'static str {
    match s {
        Segment::A => "A",
        Segment::B => "B",
    }
}

/// Secondary analyses report their failure inline instead of aborting.
fn inline<T: serde::Serialize, E: std::fmt::Display>(r: Result<T, E>) -> Value {
    match r {
        Ok(v) => json_of(&v),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn silhouette(g: &Globals, a: SilhouetteArgs) -> CmdResult {
    let (mut input, config) = load(g, &a.corpus, false)?;
    let by_segment = pick(a.by_segment, g.file.by_segment, false);
    let leave_one_out = pick(a.leave_one_out, g.file.leave_one_out, false);
    let definitions = a.definitions.or_else(|| g.file.definitions.clone());
    if definitions.is_some() && input.vocab.is_none() {
        return Err(CliError::usage("--definitions needs --vocab"));
    }
    if let (Some(path), Some(vocab)) = (&definitions, input.vocab.as_mut()) {
        vocab.read_definition_counts(open(path, "definition counts")?)?;
    }
    let mode = if by_segment { KeyMode::TypeSegment } else { KeyMode::Type };
    let table = accumulate_centroids_par::<f64>(&input.records, input.dim, mode)?;
    let centroids = table.finalize();
    let report = silhouette_corpus(&input.records, &centroids, SilhouetteOptions { leave_one_out })?;

    let mut result = json!({
        "input": input.summary(),
        "clusters": centroids.len(),
        "corpus": json_of(&report.corpus),
        "skipped_singleton_tokens": report.skipped_singleton_tokens,
        "cohesion_vs_separation": inline(cohesion_vs_separation_test(&report)),
    });
    if let (Some(_), Some(vocab)) = (&definitions, input.vocab.as_ref()) {
        let rows = per_type_rows(&report, vocab);
        result["regression"] = inline(regress_silhouette(&rows));
        result["monosemy_contrast"] = inline(group_contrast(&report, |t| vocab.polysemy(t)));
    }

    let vocab = input.vocab.as_ref();
    let mut types = Table::new(
        "silhouette_types",
        &["type_id", "surface", "count", "mean_silh", "min_silh", "max_silh", "frac_negative"],
    );
    for t in &report.per_type {
        types.push(vec![
            t.type_id.to_string(),
            surface(vocab, t.type_id),
            t.count.to_string(),
            num(t.mean_silh),
            num(t.min_silh),
            num(t.max_silh),
            num(t.frac_negative),
        ]);
    }
    let mut out = Output::new("silhouette", result);
    out.tables.push(types);
    if a.dump_tokens {
        let mut tokens = Table::new("silhouette_tokens", &["ordinal", "type_id", "segment", "coh", "sep", "silh"]);
        for t in &report.tokens {
            tokens.push(vec![
                t.ordinal.to_string(),
                t.type_id.to_string(),
                segment_tag(t.segment).into(),
                num(t.value.coh),
                num(t.value.sep),
                num(t.value.silh),
            ]);
        }
        out.tables.push(tokens);
    }
    let config = merge(
        config,
        json!({
            "by_segment": by_segment,
            "leave_one_out": leave_one_out,
            "definitions": definitions,
            "dump_tokens": a.dump_tokens,
        }),
    );
    Ok((config, out))
}

pub fn segshift(g: &Globals, a: SegshiftArgs) -> CmdResult {
    let (input, config) = load(g, &a.corpus, false)?;
    let min_count = pick(a.min_count, g.file.min_count, 2);
    let reference = match a.reference {
        Some(r) => r,
        None => parse_enum::<ReferenceArg>("reference", g.file.reference.clone())?.unwrap_or(ReferenceArg::InSample),
    };
    let mode = match reference {
        ReferenceArg::InSample => ReferenceMode::InSample,
        ReferenceArg::SplitHalf => ReferenceMode::SplitHalf,
    };
    let table = accumulate_centroids_par::<f64>(&input.records, input.dim, KeyMode::TypeSegment)?;
    let pairs = segment_mse_pairs(&input.records, &table, min_count, mode)?;
    let test = segment_shift_test(&pairs)?;

    let mut result = json!({
        "input": input.summary(),
        "pairs": pairs.rows.len(),
        "skipped_types": pairs.skipped_types,
        "shift_test": json_of(&test),
    });
    if let Some(vocab) = &input.vocab {
        result["frequency_effect"] = inline(frequency_effect(&pairs, vocab));
    }

    let vocab = input.vocab.as_ref();
    let mut rows = Table::new(
        "segshift_pairs",
        &["type_id", "surface", "segment", "count", "mse_self", "mse_cross"],
    );
    let mut logs = Table::new("segshift_log_mse", &["type_id", "segment", "ln_mse_self", "ln_mse_cross"]);
    for p in &pairs.rows {
        rows.push(vec![
            p.type_id.to_string(),
            surface(vocab, p.type_id),
            segment_tag(p.segment).into(),
            p.count.to_string(),
            num(p.mse_self),
            num(p.mse_cross),
        ]);
        logs.push(vec![
            p.type_id.to_string(),
            segment_tag(p.segment).into(),
            num(p.mse_self.ln()),
            num(p.mse_cross.ln()),
        ]);
    }
    let mut out = Output::new("segshift", result);
    out.tables.extend([rows, logs]);
    let config = merge(config, json!({ "min_count": min_count, "reference": json_of(&mode) }));
    Ok((config, out))
}

pub fn cosines(g: &Globals, a: CosinesArgs) -> CmdResult {
    let (input, config) = load(g, &a.corpus, false)?;
    let sizes = pick(a.sizes, g.file.sizes.clone(), DEFAULT_SAMPLE_SIZES.to_vec());
    let repeats = pick(a.repeats, g.file.repeats, DEFAULT_REPEATS);
    let wilcoxon = match a.wilcoxon {
        Some(w) => w,
        None => parse_enum::<WilcoxonArg>("wilcoxon", g.file.wilcoxon.clone())?.unwrap_or(WilcoxonArg::Auto),
    };
    let opts = CurveOptions {
        sizes,
        repeats,
        seed: g.seed,
        mode: match wilcoxon {
            WilcoxonArg::Auto => WilcoxonMode::Auto,
            WilcoxonArg::Exact => WilcoxonMode::Exact,
            WilcoxonArg::Normal => WilcoxonMode::Normal,
        },
    };
    let sets = sentence_cosine_sets(&input.records, &RecordFilter::pass_all());
    let report = cross_segment_cosine_test(&sets, &opts)?;

    let result = json!({
        "input": input.summary(),
        "sentences": sets.samples.len(),
        "zero_norm_tokens": sets.zero_norm_tokens,
        "duplicate_positions": sets.duplicate_positions,
        "short_sentences": sets.short_sentences,
        "n_a": report.n_a,
        "n_b": report.n_b,
        "test": json_of(&report.test),
        "cohens_d": report.cohens_d,
        "skipped_sizes": report.skipped_sizes,
    });
    let mut curve = Table::new("cosines_curve", &["size", "full", "repeats", "mean_p", "min_p", "max_p"]);
    for c in &report.curve {
        curve.push(vec![
            c.size.to_string(),
            c.full.to_string(),
            c.repeats.to_string(),
            num(c.mean_p),
            num(c.min_p),
            num(c.max_p),
        ]);
    }
    let mut out = Output::new("cosines", result);
    out.tables.push(curve);
    if a.dump_pools {
        let mut pool = Table::new("cosines_pool", &["input_id", "segment", "cosine"]);
        for s in &sets.samples {
            for &v in &s.values {
                pool.push(vec![s.input_id.to_string(), segment_tag(s.segment).into(), num(v)]);
            }
        }
        out.tables.push(pool);
    }
    let config = merge(
        config,
        json!({
            "sizes": opts.sizes,
            "repeats": opts.repeats,
            "wilcoxon": json_of(&opts.mode),
            "dump_pools": a.dump_pools,
        }),
    );
    Ok((config, out))
}

fn benchmark_path(flag: Option<PathBuf>, file: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    flag.or_else(|| file.clone()).ok_or_else(|| CliError::usage("--benchmark is required"))
}

pub fn wordsim(g: &Globals, a: WordsimArgs) -> CmdResult {
    let bench_path = benchmark_path(a.benchmark, &g.file.benchmark)?;
    let (input, config) = load(g, &a.corpus, true)?;
    let bench = PairBenchmark::read_tsv(open(&bench_path, "benchmark")?)?;
    let vocab = input.vocab.as_ref().expect("load checked the vocabulary");
    let table = accumulate_centroids_par::<f64>(&input.records, input.dim, KeyMode::Type)?;
    let vectors = type_average_embeddings(&table, vocab)?;
    let corr = word_similarity_correlation(&vectors, &bench)?;
    let result = json!({
        "input": input.summary(),
        "benchmark_pairs": bench.rows.len(),
        "words_with_vectors": vectors.len(),
        "correlation": json_of(&corr),
    });
    let config = merge(config, json!({ "benchmark": bench_path }));
    Ok((config, Output::new("wordsim", result)))
}

pub fn sentsim(g: &Globals, a: SentsimArgs) -> CmdResult {
    let bench_path = benchmark_path(a.benchmark, &g.file.benchmark)?;
    let scheme = match a.scheme {
        Some(s) => s,
        None => parse_enum::<SchemeArg>("scheme", g.file.scheme.clone())?.unwrap_or(SchemeArg::Pair),
    };
    let scheme = match scheme {
        SchemeArg::Pair => InputScheme::Pair,
        SchemeArg::Single => InputScheme::Single,
    };
    let (input, config) = load(g, &a.corpus, false)?;
    let bench = SentencePairBenchmark::read_tsv(open(&bench_path, "benchmark")?)?;
    let (rows, missing) = compose_benchmark(&bench, &input.records, &RecordFilter::pass_all(), scheme)?;
    let corr = sentence_relatedness_correlation(&rows)?;
    let result = json!({
        "input": input.summary(),
        "benchmark_rows": bench.rows.len(),
        "composed": rows.len(),
        "missing": missing,
        "correlation": json_of(&corr),
    });
    let config = merge(config, json!({ "benchmark": bench_path, "scheme": json_of(&scheme) }));
    Ok((config, Output::new("sentsim", result)))
}

fn gauss_vec(rng: &mut impl Rng, dim: usize, sd: f64) -> Vec<f64> {
    let n = Normal::new(0.0, sd).expect("sd is finite and non-negative");
    (0..dim).map(|_| n.sample(rng)).collect()
}

fn random_token(seed: u64, dim: usize) -> TokenInput<f64> {
    let mut rng = seeded_rng(seed);
    TokenInput {
        word: gauss_vec(&mut rng, dim, 1.0),
        position: gauss_vec(&mut rng, dim, 0.5),
        segment: gauss_vec(&mut rng, dim, 0.5),
    }
}

/// First-layer expansion residual, accumulated-term fold gap, and
/// zero-segment exactness over `stacks` random stacks.
fn check_identities(layers: usize, dim: usize, stacks: usize, seed: u64) -> Result<Value, CliError> {
    let mut expansion = 0.0f64;
    let mut fold = 0.0f64;
    let mut zero_exact = true;
    for s in 0..stacks as u64 {
        let kind = [SubLayerKind::Linear, SubLayerKind::Identity, SubLayerKind::Zero][(s % 3) as usize];
        let stack = StackConfig::<f64>::random(layers, dim, kind, child_seed(seed, 2 * s))?;
        let token = random_token(child_seed(seed, 2 * s + 1), dim);
        let e = expand_layer(&stack, &token)?;
        expansion = expansion.max(e.max_residual);

        let (_, trace) = forward(&stack, &token)?;
        let acc = accumulated_segment_term(&trace, &stack, &token.segment)?;
        let mut f = token.segment.clone();
        for (p, lt) in stack.layers.iter().zip(&trace.layers) {
            for d in 0..dim {
                f[d] = p.gain[d] * f[d] / lt.sigma;
            }
        }
        for d in 0..dim {
            fold = fold.max((f[d] - acc.term[d]).abs());
        }

        let zero = TokenInput {
            segment: vec![0.0; dim],
            ..token
        };
        let ez = expand_layer(&stack, &zero)?;
        let (_, zt) = forward(&stack, &zero)?;
        let az = accumulated_segment_term(&zt, &stack, &zero.segment)?;
        zero_exact &= ez.segment.iter().all(|&v| v == 0.0) && ez.o_tilde == ez.output;
        zero_exact &= az.term.iter().all(|&v| v == 0.0);
    }
    let passed = expansion <= IDENTITY_TOL && fold <= IDENTITY_TOL && zero_exact;
    Ok(json!({
        "stacks": stacks,
        "layers": layers,
        "dim": dim,
        "tolerance": IDENTITY_TOL,
        "max_identity_residual": expansion,
        "max_accumulated_term_gap": fold,
        "zero_segment_exact": zero_exact,
        "passed": passed,
    }))
}

fn default_vocab_path(corpus: &Path) -> PathBuf {
    let mut name = corpus.file_stem().unwrap_or_default().to_os_string();
    name.push(".vocab.tsv");
    corpus.with_file_name(name)
}

pub fn simulate(g: &Globals, a: SimulateArgs) -> CmdResult {
    let layers = pick(a.layers, g.file.layers, 4);
    let dim = pick(a.dim, g.file.dim, 16);
    let stacks = pick(a.stacks, g.file.stacks, 100);
    if layers == 0 || dim < 2 || stacks == 0 {
        return Err(CliError::usage("--layers and --stacks must be at least 1, --dim at least 2"));
    }
    let check = a.check_eq23 || (!a.separability && a.generate.is_none());
    let mut result = json!({});
    let mut failed = None;

    if check {
        let r = check_identities(layers, dim, stacks, g.seed)?;
        if r["passed"] != Value::Bool(true) {
            failed = Some(format!(
                "layer identity check failed: residual {}, accumulated gap {}",
                r["max_identity_residual"], r["max_accumulated_term_gap"]
            ));
        }
        result["identity_check"] = r;
    }
    if a.separability {
        let stack = StackConfig::<f64>::random(layers, dim, SubLayerKind::Linear, child_seed(g.seed, 1 << 40))?;
        let mut rng = seeded_rng(child_seed(g.seed, (1 << 40) + 1));
        let seg_a = gauss_vec(&mut rng, dim, 0.5);
        let seg_b = gauss_vec(&mut rng, dim, 0.5);
        let opts = SeparabilityOptions {
            n_per_segment: 500,
            input_sd: 1.0,
            seed: child_seed(g.seed, (1 << 40) + 2),
        };
        result["separability"] = json_of(&segment_separability(&stack, &seg_a, &seg_b, &opts)?);
    }
    let mut vocab_out = None;
    if let Some(path) = &a.generate {
        let params = SyntheticParams {
            n_types: a.types,
            tokens_per_type: a.tokens_per_type,
            dim,
            centroid_spread: a.spread,
            noise_sd: a.noise,
            delta: a.delta,
            direction: None,
            tokens_per_sentence: a.sentence_len,
            specials: a.specials,
            seed: g.seed,
        };
        let corpus = gen_synthetic_corpus(&params)?;
        let vpath = a.vocab_out.clone().unwrap_or_else(|| default_vocab_path(path));
        let create = |p: &Path| {
            File::create(p)
                .map(BufWriter::new)
                .map_err(|e| CliError::data(format!("cannot create {}: {e}", p.display())))
        };
        let summary = write_corpus(&corpus.records, corpus.dim, create(path)?)?;
        corpus.vocab.write_tsv(create(&vpath)?)?;
        result["generated"] = json!({
            "corpus": path,
            "vocab": vpath,
            "records": summary.record_count,
            "checksum": format!("{:08x}", summary.checksum),
            "params": json_of(&params),
        });
        vocab_out = Some(vpath);
    }
    let config = json!({
        "seed": g.seed,
        "threads": g.threads,
        "check_eq23": check,
        "separability": a.separability,
        "layers": layers,
        "dim": dim,
        "stacks": stacks,
        "generate": a.generate,
        "vocab_out": vocab_out,
    });
    let mut out = Output::new("simulate", result);
    out.failed_check = failed;
    Ok((config, out))
}

pub fn validate(g: &Globals, a: ValidateArgs) -> CmdResult {
    let report = validate_corpus(open(&a.corpus, "corpus")?);
    if !report.is_valid() {
        let msg = match (&report.fatal, report.record_errors.first()) {
            (Some(f), _) => f.clone(),
            (None, Some((ord, m))) => format!("record {ord}: {m}"),
            (None, None) => "payload checksum mismatch".to_string(),
        };
        let mut e = CliError::data(format!("{}: {msg}", a.corpus.display()));
        e.offset = report.fatal_offset;
        return Err(e);
    }
    let config = json!({ "corpus": a.corpus, "seed": g.seed });
    Ok((config, Output::new("validate", json_of(&report))))
}
