//! EMBX binary format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! header   magic "EMBX" | version u32 | dim u32 | record_count u64      (20 bytes)
//! record   type_id u32 | segment u8 | input_id u64 | position u16 | dim x f32
//! footer   CRC-32 of every record byte u32
//! ```
//!
//! Records have no padding, so record `k` always starts at
//! `HEADER_LEN + k * record_len(dim)`.

use std::io::{self, Read, Write};

use serde::Serialize;

use super::record::{Segment, TokenRecord};
use crate::error::CorpusError;

pub const MAGIC: [u8; 4] = *b"EMBX";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
pub const FOOTER_LEN: usize = 4;
const RECORD_META_LEN: usize = 4 + 1 + 8 + 2;

/// Size in bytes of one record at dimension `dim`.
pub const fn record_len(dim: usize) -> usize {
    RECORD_META_LEN + 4 * dim
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusHeader {
    pub magic: [u8; 4],
    pub format_version: u32,
    pub dim: u32,
    pub record_count: u64,
}

impl CorpusHeader {
    pub fn new(dim: u32, record_count: u64) -> Self {
        Self {
            magic: MAGIC,
            format_version: FORMAT_VERSION,
            dim,
            record_count,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn record_offset(&self, ordinal: u64) -> u64 {
        HEADER_LEN as u64 + ordinal * record_len(self.dim()) as u64
    }

    /// Total file length implied by the header.
    pub fn file_len(&self) -> u64 {
        self.record_offset(self.record_count) + FOOTER_LEN as u64
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&self.magic);
        out[4..8].copy_from_slice(&self.format_version.to_le_bytes());
        out[8..12].copy_from_slice(&self.dim.to_le_bytes());
        out[12..20].copy_from_slice(&self.record_count.to_le_bytes());
        out
    }

    fn decode(bytes: &[u8; HEADER_LEN]) -> Result<Self, CorpusError> {
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&bytes[0..4]);
        if magic != MAGIC {
            return Err(CorpusError::BadMagic { found: magic });
        }
        let format_version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if format_version != FORMAT_VERSION {
            return Err(CorpusError::UnsupportedVersion(format_version));
        }
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if dim == 0 {
            return Err(CorpusError::ZeroDim);
        }
        let record_count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        Ok(Self {
            magic,
            format_version,
            dim,
            record_count,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WriteSummary {
    pub record_count: u64,
    pub checksum: u32,
}

fn encode_record(record: &TokenRecord, buf: &mut Vec<u8>) {
    buf.clear();
    buf.extend_from_slice(&record.type_id.to_le_bytes());
    buf.push(record.segment.tag());
    buf.extend_from_slice(&record.input_id.to_le_bytes());
    buf.extend_from_slice(&record.position.to_le_bytes());
    for v in &record.vector {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn check_record(record: &TokenRecord, ordinal: u64, dim: usize) -> Result<(), CorpusError> {
    if record.dim() != dim {
        return Err(CorpusError::DimensionMismatch {
            ordinal,
            expected: dim,
            found: record.dim(),
        });
    }
    if let Some(component) = record.first_non_finite() {
        return Err(CorpusError::NonFinite { ordinal, component });
    }
    Ok(())
}

/// Streaming EMBX writer. The record count is fixed up front because it
/// lives in the header.
pub struct CorpusWriter<W: Write> {
    sink: W,
    header: CorpusHeader,
    written: u64,
    bytes: u64,
    hasher: crc32fast::Hasher,
    buf: Vec<u8>,
}

impl<W: Write> CorpusWriter<W> {
    pub fn new(sink: W, dim: usize, record_count: u64) -> Result<Self, CorpusError> {
        if dim == 0 {
            return Err(CorpusError::ZeroDim);
        }
        let dim32 = u32::try_from(dim).map_err(|_| CorpusError::DimensionMismatch {
            ordinal: 0,
            expected: u32::MAX as usize,
            found: dim,
        })?;
        let mut writer = Self {
            sink,
            header: CorpusHeader::new(dim32, record_count),
            written: 0,
            bytes: 0,
            hasher: crc32fast::Hasher::new(),
            buf: Vec::with_capacity(record_len(dim)),
        };
        let header = writer.header.encode();
        writer.write_bytes(&header)?;
        Ok(writer)
    }

    fn write_bytes(&mut self, bytes: &[u8]) -> Result<(), CorpusError> {
        self.sink
            .write_all(bytes)
            .map_err(|source| CorpusError::PartialWrite {
                bytes_written: self.bytes,
                source,
            })?;
        self.bytes += bytes.len() as u64;
        Ok(())
    }

    pub fn push(&mut self, record: &TokenRecord) -> Result<(), CorpusError> {
        if self.written == self.header.record_count {
            return Err(CorpusError::CountMismatch {
                declared: self.header.record_count,
                written: self.written + 1,
            });
        }
        check_record(record, self.written, self.header.dim())?;
        let mut buf = std::mem::take(&mut self.buf);
        encode_record(record, &mut buf);
        self.hasher.update(&buf);
        let res = self.write_bytes(&buf);
        self.buf = buf;
        res?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<WriteSummary, CorpusError> {
        if self.written != self.header.record_count {
            return Err(CorpusError::CountMismatch {
                declared: self.header.record_count,
                written: self.written,
            });
        }
        let checksum = self.hasher.clone().finalize();
        self.write_bytes(&checksum.to_le_bytes())?;
        self.sink.flush().map_err(|source| CorpusError::PartialWrite {
            bytes_written: self.bytes,
            source,
        })?;
        Ok(WriteSummary {
            record_count: self.written,
            checksum,
        })
    }
}

/// Writes `records` as a complete EMBX file. Every record is validated
/// before the first byte goes out, so a bad record never leaves a partial file.
pub fn write_corpus<W: Write>(
    records: &[TokenRecord],
    dim: usize,
    sink: W,
) -> Result<WriteSummary, CorpusError> {
    for (i, r) in records.iter().enumerate() {
        check_record(r, i as u64, dim)?;
    }
    let mut writer = CorpusWriter::new(sink, dim, records.len() as u64)?;
    for r in records {
        writer.push(r)?;
    }
    writer.finish()
}

/// Reads `buf.len()` bytes; distinguishes clean EOF-before-anything from a short read.
fn read_full<R: Read>(src: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match src.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Sequential EMBX reader yielding one `Result` per record.
///
/// Record-level problems (non-finite values, bad segment tag) are yielded as
/// errors and the stream continues; structural problems (truncation, checksum)
/// end it. The footer checksum is verified after the last record and
/// surfaces as a final `Err` item on mismatch.
pub struct CorpusReader<R: Read> {
    src: R,
    header: CorpusHeader,
    next: u64,
    hasher: crc32fast::Hasher,
    buf: Vec<u8>,
    done: bool,
}

impl<R: Read> CorpusReader<R> {
    pub fn new(mut src: R) -> Result<Self, CorpusError> {
        let mut head = [0u8; HEADER_LEN];
        if read_full(&mut src, &mut head)? < HEADER_LEN {
            return Err(CorpusError::Truncated { offset: 0 });
        }
        let header = CorpusHeader::decode(&head)?;
        Ok(Self {
            src,
            buf: vec![0u8; record_len(header.dim())],
            header,
            next: 0,
            hasher: crc32fast::Hasher::new(),
            done: false,
        })
    }

    pub fn header(&self) -> &CorpusHeader {
        &self.header
    }

    pub fn dim(&self) -> usize {
        self.header.dim()
    }

    fn decode(&self, ordinal: u64) -> Result<TokenRecord, CorpusError> {
        let b = &self.buf;
        let type_id = u32::from_le_bytes(b[0..4].try_into().unwrap());
        let tag = b[4];
        let input_id = u64::from_le_bytes(b[5..13].try_into().unwrap());
        let position = u16::from_le_bytes(b[13..15].try_into().unwrap());
        let segment = Segment::from_tag(tag).ok_or(CorpusError::BadSegment { ordinal, tag })?;
        let vector: Vec<f32> = b[RECORD_META_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let record = TokenRecord {
            type_id,
            segment,
            input_id,
            position,
            vector,
        };
        if let Some(component) = record.first_non_finite() {
            return Err(CorpusError::NonFinite { ordinal, component });
        }
        Ok(record)
    }

    fn read_footer(&mut self) -> Result<(), CorpusError> {
        let offset = self.header.record_offset(self.header.record_count);
        let mut foot = [0u8; FOOTER_LEN];
        if read_full(&mut self.src, &mut foot)? < FOOTER_LEN {
            return Err(CorpusError::Truncated { offset });
        }
        let stored = u32::from_le_bytes(foot);
        let computed = self.hasher.clone().finalize();
        if stored != computed {
            return Err(CorpusError::ChecksumMismatch { stored, computed });
        }
        let mut probe = [0u8; 1];
        if read_full(&mut self.src, &mut probe)? != 0 {
            return Err(CorpusError::TrailingBytes {
                offset: offset + FOOTER_LEN as u64,
            });
        }
        Ok(())
    }
}

impl<R: Read> Iterator for CorpusReader<R> {
    type Item = Result<TokenRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.next == self.header.record_count {
            self.done = true;
            return self.read_footer().err().map(Err);
        }
        let ordinal = self.next;
        let mut buf = std::mem::take(&mut self.buf);
        let got = read_full(&mut self.src, &mut buf);
        self.buf = buf;
        match got {
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
            Ok(n) if n < self.buf.len() => {
                self.done = true;
                return Some(Err(CorpusError::Truncated {
                    offset: self.header.record_offset(ordinal),
                }));
            }
            Ok(_) => {}
        }
        self.hasher.update(&self.buf);
        self.next += 1;
        Some(self.decode(ordinal))
    }
}

/// Opens an EMBX stream, validating the header.
pub fn read_corpus<R: Read>(src: R) -> Result<CorpusReader<R>, CorpusError> {
    CorpusReader::new(src)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    /// First error of any kind aborts.
    #[default]
    Strict,
    /// Record-level errors are collected and the record dropped.
    Skip,
}

#[derive(Debug)]
pub struct LoadedCorpus {
    pub header: CorpusHeader,
    pub records: Vec<TokenRecord>,
    /// Record-level errors tolerated in [`ReadMode::Skip`].
    pub skipped: Vec<CorpusError>,
}

impl LoadedCorpus {
    pub fn dim(&self) -> usize {
        self.header.dim()
    }
}

/// Reads a whole corpus into memory.
pub fn read_all<R: Read>(src: R, mode: ReadMode) -> Result<LoadedCorpus, CorpusError> {
    let reader = CorpusReader::new(src)?;
    let header = *reader.header();
    let mut records = Vec::with_capacity(header.record_count.min(1 << 24) as usize);
    let mut skipped = Vec::new();
    for item in reader {
        match item {
            Ok(r) => records.push(r),
            Err(e) if mode == ReadMode::Skip && e.is_record_level() => skipped.push(e),
            Err(e) => return Err(e),
        }
    }
    Ok(LoadedCorpus {
        header,
        records,
        skipped,
    })
}

/// Outcome of a full format check.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub header: Option<CorpusHeader>,
    pub records_ok: u64,
    /// (ordinal, message) for each record-level problem.
    pub record_errors: Vec<(u64, String)>,
    pub checksum_ok: bool,
    /// Structural error that ended the scan, if any.
    pub fatal: Option<String>,
    pub fatal_offset: Option<u64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.fatal.is_none() && self.record_errors.is_empty() && self.checksum_ok
    }
}

/// Scans a stream end to end without keeping records.
pub fn validate<R: Read>(src: R) -> ValidationReport {
    let mut report = ValidationReport {
        header: None,
        records_ok: 0,
        record_errors: Vec::new(),
        checksum_ok: false,
        fatal: None,
        fatal_offset: None,
    };
    let reader = match CorpusReader::new(src) {
        Ok(r) => r,
        Err(e) => {
            report.fatal_offset = e.offset();
            report.fatal = Some(e.to_string());
            return report;
        }
    };
    report.header = Some(*reader.header());
    let mut ended_clean = true;
    for item in reader {
        match item {
            Ok(_) => report.records_ok += 1,
            Err(e) if e.is_record_level() => {
                let ordinal = match e {
                    CorpusError::NonFinite { ordinal, .. } | CorpusError::BadSegment { ordinal, .. } => ordinal,
                    _ => unreachable!(),
                };
                report.record_errors.push((ordinal, e.to_string()));
            }
            Err(e) => {
                ended_clean = false;
                report.fatal_offset = e.offset();
                report.fatal = Some(e.to_string());
            }
        }
    }
    report.checksum_ok = ended_clean;
    report
}
