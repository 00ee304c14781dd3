use std::fs;
use std::path::Path;

use cohaudit::{CorpusError, Error, StatsError};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_DEGENERATE: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    Data,
    Degenerate,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    pub offset: Option<u64>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
            offset: None,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Data,
            message: message.into(),
            offset: None,
        }
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Degenerate,
            message: message.into(),
            offset: None,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Data => EXIT_DATA,
            ErrorKind::Degenerate => EXIT_DEGENERATE,
        }
    }

    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn to_json(&self, command: &str) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "error": {
                "kind": self.kind,
                "exit_code": self.exit_code(),
                "message": self.message,
                "offset": self.offset,
            }
        })
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self {
            kind: ErrorKind::Data,
            offset: e.offset(),
            message: e.to_string(),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        if e.is_degenerate() || matches!(e, StatsError::InsufficientData { .. } | StatsError::EmptyGroup(_)) {
            Self::degenerate(e.to_string())
        } else {
            Self::data(e.to_string())
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Corpus(c) => c.into(),
            Error::Stats(s) => s.into(),
            Error::SeparationUndefined { .. } | Error::ZeroVariance { .. } => Self::degenerate(e.to_string()),
            Error::InvalidParameter(_) => Self::usage(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

/// A CSV file written next to the JSON report.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Result of one subcommand run.
pub struct Output {
    pub command: &'static str,
    pub result: Value,
    pub tables: Vec<Table>,
    /// Numerical check failed; report is still emitted.
    pub failed_check: Option<String>,
}

impl Output {
    pub fn new(command: &'static str, result: Value) -> Self {
        Self {
            command,
            result,
            tables: Vec::new(),
            failed_check: None,
        }
    }
}

pub fn report_json(command: &str, config: &Value, result: &Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "cohaudit",
        "command": command,
        "config": config,
        "result": result,
    })
}

pub fn write_outputs(dir: &Path, command: &str, report: &Value, tables: &[Table]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(format!("{command}.json"));
    fs::write(&path, pretty(report) + "\n").map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
        let io = |e: csv::Error| CliError::data(format!("cannot write {}: {e}", path.display()));
        w.write_record(&t.header).map_err(io)?;
        for row in &t.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

/// Shortest round-trip formatting for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x}")
}
