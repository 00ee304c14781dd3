//! Optional `key = value` config file. Every key mirrors a long flag with
//! dashes replaced by underscores; flags given on the command line win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::report::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub definitions: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
    pub keep_specials: Option<bool>,
    pub keep_sep: Option<bool>,
    pub min_type_count: Option<u64>,
    pub segments: Option<String>,
    pub skip_bad_records: Option<bool>,
    pub by_segment: Option<bool>,
    pub leave_one_out: Option<bool>,
    pub min_count: Option<u64>,
    pub reference: Option<String>,
    pub sizes: Option<Vec<usize>>,
    pub repeats: Option<usize>,
    pub wilcoxon: Option<String>,
    pub scheme: Option<String>,
    pub layers: Option<usize>,
    pub dim: Option<usize>,
    pub stacks: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag value, else config value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Parses a config-file string into a clap value enum.
pub fn parse_enum<E: clap::ValueEnum>(key: &str, value: Option<String>) -> Result<Option<E>, CliError> {
    value
        .map(|v| E::from_str(&v, true).map_err(|_| CliError::usage(format!("config key {key}: invalid value {v:?}"))))
        .transpose()
}
