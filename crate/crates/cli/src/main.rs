mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{pick, FileConfig};
use report::{pretty, report_json, write_outputs, CliError, EXIT_DEGENERATE, EXIT_USAGE};

/// Seed used when neither a flag nor the config file sets one.
pub const DEFAULT_SEED: u64 = 20_190_601;

/// Environment variable that sets the output directory when no flag does.
pub const OUT_DIR_ENV: &str = "COHAUDIT_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "cohaudit", version, about = "Coherence audits for token embedding corpora")]
struct Cli {
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for the JSON report and CSV tables.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-token silhouette against type centroids.
    Silhouette(SilhouetteArgs),
    /// Self- versus cross-segment MSE per word type.
    Segshift(SegshiftArgs),
    /// Within-sentence cosine pools compared across segments.
    Cosines(CosinesArgs),
    /// Word-pair similarity from type-average vectors.
    Wordsim(WordsimArgs),
    /// Sentence-pair relatedness from sum-composed vectors.
    Sentsim(SentsimArgs),
    /// Layer-norm stack checks and synthetic corpus generation.
    Simulate(SimulateArgs),
    /// Check a corpus file.
    Validate(ValidateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Silhouette(_) => "silhouette",
            Command::Segshift(_) => "segshift",
            Command::Cosines(_) => "cosines",
            Command::Wordsim(_) => "wordsim",
            Command::Sentsim(_) => "sentsim",
            Command::Simulate(_) => "simulate",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// EMBX corpus file.
    pub corpus: PathBuf,
    /// Vocabulary TSV (id, surface, frequency, flags).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Keep tokens flagged special in the vocabulary.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub keep_specials: Option<bool>,
    /// Keep separator tokens even when other specials are dropped.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub keep_sep: Option<bool>,
    /// Drop types with fewer tokens than this.
    #[arg(long)]
    pub min_type_count: Option<u64>,
    /// Segments to keep.
    #[arg(long, value_enum)]
    pub segments: Option<SegmentsArg>,
    /// Drop malformed records instead of failing.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub skip_bad_records: Option<bool>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentsArg {
    A,
    B,
    Both,
}

#[derive(Args, Debug)]
pub struct SilhouetteArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Key clusters by type and segment instead of type.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub by_segment: Option<bool>,
    /// Exclude each token from its own centroid.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub leave_one_out: Option<bool>,
    /// Definition-count TSV (id, count); enables the regression and the monosemy contrast.
    #[arg(long)]
    pub definitions: Option<PathBuf>,
    /// Also write every token score as CSV.
    #[arg(long)]
    pub dump_tokens: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceArg {
    InSample,
    SplitHalf,
}

#[derive(Args, Debug)]
pub struct SegshiftArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Minimum tokens per (type, segment) group.
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long, value_enum)]
    pub reference: Option<ReferenceArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonArg {
    Auto,
    Exact,
    Normal,
}

#[derive(Args, Debug)]
pub struct CosinesArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Per-segment subsample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Subsampled tests per size.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, value_enum)]
    pub wilcoxon: Option<WilcoxonArg>,
    /// Also write both cosine pools as CSV.
    #[arg(long)]
    pub dump_pools: bool,
}

#[derive(Args, Debug)]
pub struct WordsimArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Word-pair TSV (word1, word2, score).
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    /// Both sentences in one input, as segments A and B.
    Pair,
    /// Each sentence in its own input (ids 2n and 2n+1).
    Single,
}

#[derive(Args, Debug)]
pub struct SentsimArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Sentence-pair TSV (id, sentence1, sentence2, score).
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Verify the first-layer expansion and the accumulated segment term.
    #[arg(long)]
    pub check_eq23: bool,
    /// Measure held-out separability of the two segments after the stack.
    #[arg(long)]
    pub separability: bool,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Random stacks to check.
    #[arg(long)]
    pub stacks: Option<usize>,
    /// Write a synthetic EMBX corpus here.
    #[arg(long)]
    pub generate: Option<PathBuf>,
    /// Vocabulary for the generated corpus (default: corpus path with .vocab.tsv).
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub types: usize,
    #[arg(long, default_value_t = 20)]
    pub tokens_per_type: usize,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Segment B offset along the first axis.
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 10)]
    pub sentence_len: usize,
    /// Add CLS and SEP tokens.
    #[arg(long)]
    pub specials: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    pub corpus: PathBuf,
}

/// Global settings after merging flags, config file and environment.
pub struct Globals {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub file: FileConfig,
}

fn run(cli: Cli) -> Result<(serde_json::Value, report::Output), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| file.out_dir.clone());
    let threads = cli.threads.or(file.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot configure threads: {e}")))?;
    }
    let g = Globals {
        seed: pick(cli.seed, file.seed, DEFAULT_SEED),
        threads,
        out_dir,
        file,
    };
    match cli.command {
        Command::Silhouette(a) => commands::silhouette(&g, a),
        Command::Segshift(a) => commands::segshift(&g, a),
        Command::Cosines(a) => commands::cosines(&g, a),
        Command::Wordsim(a) => commands::wordsim(&g, a),
        Command::Sentsim(a) => commands::sentsim(&g, a),
        Command::Simulate(a) => commands::simulate(&g, a),
        Command::Validate(a) => commands::validate(&g, a),
    }
    .and_then(|(config, out)| {
        let rep = report_json(out.command, &config, &out.result);
        if let Some(dir) = &g.out_dir {
            write_outputs(dir, out.command, &rep, &out.tables)?;
        }
        Ok((rep, out))
    })
}

/// Prints to stdout; a closed pipe is not an error worth reporting.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok((rep, out)) => {
            emit(&pretty(&rep));
            match out.failed_check {
                Some(msg) => {
                    eprintln!("cohaudit {name}: {msg}");
                    ExitCode::from(EXIT_DEGENERATE)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            emit(&pretty(&e.to_json(name)));
            eprintln!("cohaudit {name}: {}", e.message);
            ExitCode::from(e.exit_code())
        }
    }
}
