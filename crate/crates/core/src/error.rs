use std::io;

use thiserror::Error;

use crate::cluster::ClusterKey;

/// Errors raised while encoding, decoding or validating corpus files and sidecars.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("bad magic {found:?}, expected \"EMBX\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("header declares dimension 0")]
    ZeroDim,
    #[error("record {ordinal}: vector length {found} does not match corpus dimension {expected}")]
    DimensionMismatch {
        ordinal: u64,
        expected: usize,
        found: usize,
    },
    #[error("record {ordinal}: non-finite value at component {component}")]
    NonFinite { ordinal: u64, component: usize },
    #[error("record {ordinal}: invalid segment tag {tag}")]
    BadSegment { ordinal: u64, tag: u8 },
    #[error("truncated input at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("unexpected trailing data at byte offset {offset}")]
    TrailingBytes { offset: u64 },
    #[error("header declared {declared} records but {written} were written")]
    CountMismatch { declared: u64, written: u64 },
    #[error("write failed after {bytes_written} bytes: {source}")]
    PartialWrite {
        bytes_written: u64,
        #[source]
        source: io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Table {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CorpusError {
    /// True for errors confined to a single record; a reader can keep going past them.
    pub fn is_record_level(&self) -> bool {
        matches!(self, Self::NonFinite { .. } | Self::BadSegment { .. })
    }

    /// Byte offset the error refers to, when it has one.
    pub fn offset(&self) -> Option<u64> {
        match self {
            Self::Truncated { offset } | Self::TrailingBytes { offset } => Some(*offset),
            _ => None,
        }
    }
}

/// Failures of the statistics kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("insufficient data: need at least {needed}, got {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),
    #[error("all values are tied")]
    AllTied,
    #[error("rank-deficient design: column {column} is {reason}")]
    RankDeficient { column: String, reason: &'static str },
    #[error("group {0} is empty")]
    EmptyGroup(String),
    #[error("sample size {size} exceeds population {population}")]
    SampleTooLarge { size: usize, population: usize },
    #[error("exact mode supports at most {max} pooled observations, got {n}")]
    ExactTooLarge { n: usize, max: usize },
    #[error("non-finite input value")]
    NonFinite,
}

impl StatsError {
    /// Degenerate statistics are numerical dead ends rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Self::DegenerateVariance(_) | Self::AllTied | Self::RankDeficient { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("separation undefined: centroid table has {clusters} cluster(s), need at least 2")]
    SeparationUndefined { clusters: usize },
    #[error("cluster key {0} not present in centroid table")]
    MissingKey(ClusterKey),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("zero component variance at layer {layer}")]
    ZeroVariance { layer: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
