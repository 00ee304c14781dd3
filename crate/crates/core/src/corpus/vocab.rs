//! Vocabulary and definition-count sidecars.
//!
//! Vocabulary TSV, one row per type id in ascending order starting at 0:
//!
//! ```text
//! id <TAB> surface <TAB> frequency [<TAB> flags]
//! ```
//!
//! `flags` is a comma-separated list drawn from `cls`, `sep`, `special`.
//! Definition counts live in a second TSV of `id <TAB> count` rows.
//! Blank lines and lines starting with `#` are ignored in both.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::CorpusError;

const VOCAB_FILE: &str = "vocab";
const DEFS_FILE: &str = "definition counts";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpecialKind {
    /// Sequence-initial classification token.
    Cls,
    /// Sentence separator.
    Sep,
    Other,
}

impl SpecialKind {
    fn flag(self) -> &'static str {
        match self {
            SpecialKind::Cls => "cls",
            SpecialKind::Sep => "sep",
            SpecialKind::Other => "special",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polysemy {
    Monosemous,
    Polysemous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub surface: String,
    pub frequency: u64,
    pub special: Option<SpecialKind>,
    pub definition_count: Option<u32>,
}

impl VocabEntry {
    pub fn new(surface: impl Into<String>, frequency: u64) -> Self {
        Self {
            surface: surface.into(),
            frequency,
            special: None,
            definition_count: None,
        }
    }

    pub fn with_special(mut self, kind: SpecialKind) -> Self {
        self.special = Some(kind);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    entries: Vec<VocabEntry>,
}

fn table_err(file: &'static str, line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Table {
        file,
        line,
        message: message.into(),
    }
}

fn rows<R: BufRead>(src: R) -> impl Iterator<Item = Result<(usize, String), CorpusError>> {
    src.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) => {
            let trimmed = l.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, trimmed.to_string())))
            }
        }
    })
}

impl Vocab {
    pub fn new(entries: Vec<VocabEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, type_id: u32) -> Option<&VocabEntry> {
        self.entries.get(type_id as usize)
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn push(&mut self, entry: VocabEntry) -> u32 {
        self.entries.push(entry);
        (self.entries.len() - 1) as u32
    }

    pub fn surface(&self, type_id: u32) -> Option<&str> {
        self.get(type_id).map(|e| e.surface.as_str())
    }

    pub fn special(&self, type_id: u32) -> Option<SpecialKind> {
        self.get(type_id).and_then(|e| e.special)
    }

    pub fn frequency(&self, type_id: u32) -> Option<u64> {
        self.get(type_id).map(|e| e.frequency)
    }

    pub fn definition_count(&self, type_id: u32) -> Option<u32> {
        self.get(type_id).and_then(|e| e.definition_count)
    }

    /// One definition means monosemous; unknown when no count was supplied.
    pub fn polysemy(&self, type_id: u32) -> Option<Polysemy> {
        self.definition_count(type_id).map(|c| {
            if c == 1 {
                Polysemy::Monosemous
            } else {
                Polysemy::Polysemous
            }
        })
    }

    /// Map from surface form to every type id carrying it.
    pub fn surface_index(&self) -> HashMap<&str, Vec<u32>> {
        let mut map: HashMap<&str, Vec<u32>> = HashMap::new();
        for (id, e) in self.entries.iter().enumerate() {
            map.entry(e.surface.as_str()).or_default().push(id as u32);
        }
        map
    }

    pub fn read_tsv<R: BufRead>(src: R) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for row in rows(src) {
            let (line, text) = row?;
            let cols: Vec<&str> = text.split('\t').collect();
            if !(3..=4).contains(&cols.len()) {
                return Err(table_err(VOCAB_FILE, line, format!("expected 3 or 4 columns, got {}", cols.len())));
            }
            let id: usize = cols[0]
                .trim()
                .parse()
                .map_err(|_| table_err(VOCAB_FILE, line, format!("bad type id {:?}", cols[0])))?;
            if id != entries.len() {
                return Err(table_err(
                    VOCAB_FILE,
                    line,
                    format!("type ids must be dense and ascending: expected {}, got {id}", entries.len()),
                ));
            }
            if cols[1].is_empty() {
                return Err(table_err(VOCAB_FILE, line, "empty surface form"));
            }
            let frequency: u64 = cols[2]
                .trim()
                .parse()
                .map_err(|_| table_err(VOCAB_FILE, line, format!("bad frequency {:?}", cols[2])))?;
            let mut entry = VocabEntry::new(cols[1], frequency);
            if let Some(flags) = cols.get(3) {
                for flag in flags.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    let kind = match flag {
                        "cls" => SpecialKind::Cls,
                        "sep" => SpecialKind::Sep,
                        "special" => SpecialKind::Other,
                        other => return Err(table_err(VOCAB_FILE, line, format!("unknown flag {other:?}"))),
                    };
                    entry.special = Some(kind);
                }
            }
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    pub fn write_tsv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for (id, e) in self.entries.iter().enumerate() {
            write!(sink, "{id}\t{}\t{}", e.surface, e.frequency)?;
            if let Some(kind) = e.special {
                write!(sink, "\t{}", kind.flag())?;
            }
            writeln!(sink)?;
        }
        Ok(())
    }

    /// Attaches definition counts from an `id <TAB> count` table.
    pub fn read_definition_counts<R: BufRead>(&mut self, src: R) -> Result<usize, CorpusError> {
        let mut attached = 0;
        for row in rows(src) {
            let (line, text) = row?;
            let mut cols = text.split('\t');
            let (Some(id), Some(count), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(table_err(DEFS_FILE, line, "expected 2 columns"));
            };
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| table_err(DEFS_FILE, line, format!("bad type id {id:?}")))?;
            let count: u32 = count
                .trim()
                .parse()
                .map_err(|_| table_err(DEFS_FILE, line, format!("bad count {count:?}")))?;
            if count == 0 {
                return Err(table_err(DEFS_FILE, line, "definition count must be at least 1"));
            }
            let entry = self
                .entries
                .get_mut(id)
                .ok_or_else(|| table_err(DEFS_FILE, line, format!("type id {id} not in vocabulary")))?;
            entry.definition_count = Some(count);
            attached += 1;
        }
        Ok(attached)
    }

    pub fn write_definition_counts<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for (id, e) in self.entries.iter().enumerate() {
            if let Some(c) = e.definition_count {
                writeln!(sink, "{id}\t{c}")?;
            }
        }
        Ok(())
    }
}
