//! Corpus storage: the EMBX binary record format, vocabulary sidecars,
//! record filtering and per-type counting.

mod filter;
mod format;
mod index;
mod record;
mod vocab;

pub use filter::{filter_records, FilterPolicy, RecordFilter, SegmentSet};
pub use format::{
    read_all, read_corpus, record_len, validate, write_corpus, CorpusHeader, CorpusReader,
    CorpusWriter, LoadedCorpus, ReadMode, ValidationReport, WriteSummary, FOOTER_LEN, FORMAT_VERSION,
    HEADER_LEN, MAGIC,
};
pub use index::{TypeCounts, TypeIndex};
pub use record::{Segment, TokenRecord};
pub use vocab::{Polysemy, SpecialKind, Vocab, VocabEntry};
