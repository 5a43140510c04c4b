//! Append-only, checksummed event journal.
//!
//! On-disk record layout, all integers little-endian:
//!
//! ```text
//! u64 seq | u64 written_at (unix millis) | u32 payload_len | payload | u32 crc32
//! ```
//!
//! The CRC covers the 20 header bytes and the payload, so a flipped bit
//! anywhere in a record is caught. A damaged *final* record is what a crash
//! mid-append leaves behind and is dropped on recovery; damage followed by
//! further valid records means lost data and is fatal.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::state::Event;

pub const HEADER_LEN: usize = 8 + 8 + 4;
pub const TRAILER_LEN: usize = 4;
/// Upper bound on a single payload; anything larger is treated as damage.
pub const MAX_PAYLOAD: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalRecord {
    pub seq: u64,
    pub written_at: Timestamp,
    pub payload: Vec<u8>,
}

impl JournalRecord {
    pub fn event(&self) -> Result<Event> {
        Event::decode(&self.payload)
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len() + TRAILER_LEN
    }
}

pub fn encode_record(seq: u64, written_at: Timestamp, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + TRAILER_LEN);
    out.extend_from_slice(&seq.to_le_bytes());
    out.extend_from_slice(&written_at.0.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses one record at the start of `buf`. `None` when it is truncated or fails its checksum.
fn parse_record(buf: &[u8]) -> Option<JournalRecord> {
    if buf.len() < HEADER_LEN + TRAILER_LEN {
        return None;
    }
    let seq = u64::from_le_bytes(buf[0..8].try_into().unwrap());
    let written_at = i64::from_le_bytes(buf[8..16].try_into().unwrap());
    let len = u32::from_le_bytes(buf[16..20].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD || buf.len() < HEADER_LEN + len + TRAILER_LEN {
        return None;
    }
    let body_end = HEADER_LEN + len;
    let stored = u32::from_le_bytes(buf[body_end..body_end + 4].try_into().unwrap());
    if crc32fast::hash(&buf[..body_end]) != stored {
        return None;
    }
    Some(JournalRecord {
        seq,
        written_at: Timestamp(written_at),
        payload: buf[HEADER_LEN..body_end].to_vec(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodedJournal {
    pub records: Vec<JournalRecord>,
    /// Bytes making up the verified records.
    pub valid_len: u64,
    /// 1 when a torn final record was dropped, else 0.
    pub discarded_tail: usize,
}

/// Decodes a whole journal image, separating a torn tail from real corruption.
pub fn decode_journal(bytes: &[u8]) -> Result<DecodedJournal> {
    let mut records = Vec::new();
    let mut offset = 0usize;
    while offset < bytes.len() {
        match parse_record(&bytes[offset..]) {
            Some(record) => {
                if let Some(prev) = records.last().map(|r: &JournalRecord| r.seq) {
                    if record.seq != prev + 1 {
                        return Err(BankError::CorruptJournal(format!(
                            "sequence gap at byte {offset}: {} follows {prev}",
                            record.seq
                        )));
                    }
                }
                offset += record.encoded_len();
                records.push(record);
            }
            None => {
                let expected = records.last().map(|r| r.seq + 1);
                if valid_record_after(bytes, offset, expected) {
                    return Err(BankError::CorruptJournal(format!(
                        "damaged record at byte {offset} followed by valid records"
                    )));
                }
                return Ok(DecodedJournal {
                    records,
                    valid_len: offset as u64,
                    discarded_tail: 1,
                });
            }
        }
    }
    Ok(DecodedJournal {
        records,
        valid_len: offset as u64,
        discarded_tail: 0,
    })
}

/// Looks for any intact record starting after `offset` with a later sequence number.
fn valid_record_after(bytes: &[u8], offset: usize, expected: Option<u64>) -> bool {
    let min_seq = expected.unwrap_or(1);
    (offset + 1..bytes.len().saturating_sub(HEADER_LEN + TRAILER_LEN - 1)).any(|start| {
        parse_record(&bytes[start..]).is_some_and(|r| r.seq >= min_seq)
    })
}

pub fn read_journal_file(path: &Path) -> Result<DecodedJournal> {
    match File::open(path) {
        Ok(mut f) => {
            let mut bytes = Vec::new();
            f.read_to_end(&mut bytes).map_err(BankError::storage)?;
            decode_journal(&bytes)
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(DecodedJournal::default()),
        Err(e) => Err(BankError::storage(e)),
    }
}

/// Where journal bytes go. `append` must not return until the bytes are durable.
pub trait JournalSink: Send + Sync {
    fn append(&mut self, bytes: &[u8]) -> io::Result<()>;
    /// Cuts the sink back to `len` bytes after a failed append.
    fn truncate(&mut self, len: u64) -> io::Result<()>;
}

pub struct FileSink {
    file: File,
}

impl FileSink {
    /// Opens `path` for appending, first cutting it to `valid_len` bytes.
    pub fn open(path: &Path, valid_len: u64) -> io::Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)?;
        if file.metadata()?.len() != valid_len {
            file.set_len(valid_len)?;
            file.sync_all()?;
        }
        Ok(FileSink { file })
    }
}

impl JournalSink for FileSink {
    fn append(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.file.write_all(bytes)?;
        self.file.sync_data()
    }

    fn truncate(&mut self, len: u64) -> io::Result<()> {
        self.file.set_len(len)?;
        self.file.sync_data()
    }
}

/// In-memory sink; clones share the same buffer.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    buf: Arc<Mutex<Vec<u8>>>,
}

impl MemorySink {
    pub fn new() -> Self {
        MemorySink::default()
    }

    pub fn bytes(&self) -> Vec<u8> {
        self.buf.lock().clone()
    }
}

impl JournalSink for MemorySink {
    fn append(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.buf.lock().extend_from_slice(bytes);
        Ok(())
    }

    fn truncate(&mut self, len: u64) -> io::Result<()> {
        self.buf.lock().truncate(len as usize);
        Ok(())
    }
}

/// Switchboard for [`FaultySink`]: flip it to make subsequent appends fail.
#[derive(Debug, Clone, Default)]
pub struct FaultSwitch {
    failing: Arc<AtomicBool>,
    /// Bytes of the failing append that still reach the inner sink (torn write).
    partial_bytes: Arc<AtomicUsize>,
}

impl FaultSwitch {
    pub fn new() -> Self {
        FaultSwitch::default()
    }

    /// Simulates a full disk: appends fail after writing `partial` bytes.
    pub fn fail(&self, partial: usize) {
        self.partial_bytes.store(partial, Ordering::SeqCst);
        self.failing.store(true, Ordering::SeqCst);
    }

    pub fn heal(&self) {
        self.failing.store(false, Ordering::SeqCst);
    }

    pub fn is_failing(&self) -> bool {
        self.failing.load(Ordering::SeqCst)
    }
}

/// Fault-injecting wrapper used to exercise storage failure paths.
pub struct FaultySink<S> {
    inner: S,
    switch: FaultSwitch,
    /// When false the wrapper refuses to roll back a torn write either.
    allow_truncate: bool,
}

impl<S: JournalSink> FaultySink<S> {
    pub fn new(inner: S, switch: FaultSwitch) -> Self {
        FaultySink {
            inner,
            switch,
            allow_truncate: false,
        }
    }

    pub fn allow_truncate(mut self, allow: bool) -> Self {
        self.allow_truncate = allow;
        self
    }
}

impl<S: JournalSink> JournalSink for FaultySink<S> {
    fn append(&mut self, bytes: &[u8]) -> io::Result<()> {
        if self.switch.is_failing() {
            let partial = self.switch.partial_bytes.load(Ordering::SeqCst).min(bytes.len());
            if partial > 0 {
                self.inner.append(&bytes[..partial])?;
            }
            return Err(io::Error::new(io::ErrorKind::StorageFull, "no space left on device"));
        }
        self.inner.append(bytes)
    }

    fn truncate(&mut self, len: u64) -> io::Result<()> {
        if self.switch.is_failing() && !self.allow_truncate {
            return Err(io::Error::new(io::ErrorKind::StorageFull, "no space left on device"));
        }
        self.inner.truncate(len)
    }
}

/// The single appender of the bank's event journal.
pub struct Journal {
    sink: Box<dyn JournalSink>,
    last_seq: u64,
    len: u64,
    failure: Option<String>,
}

impl Journal {
    /// `last_seq` is the sequence number of the last durable event (0 if none);
    /// `len` the current byte length of the sink.
    pub fn new(sink: Box<dyn JournalSink>, last_seq: u64, len: u64) -> Self {
        Journal {
            sink,
            last_seq,
            len,
            failure: None,
        }
    }

    pub fn in_memory() -> (Self, MemorySink) {
        let sink = MemorySink::new();
        (Journal::new(Box::new(sink.clone()), 0, 0), sink)
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn is_healthy(&self) -> bool {
        self.failure.is_none()
    }

    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    /// Durably appends `event`; returns its sequence number.
    ///
    /// After a storage error the journal refuses further appends until it is
    /// reopened through recovery.
    pub fn append(&mut self, event: &Event, written_at: Timestamp) -> Result<u64> {
        if let Some(reason) = &self.failure {
            return Err(BankError::StorageFailure(reason.clone()));
        }
        let seq = self.last_seq + 1;
        let bytes = encode_record(seq, written_at, &event.encode());
        if let Err(e) = self.sink.append(&bytes) {
            let reason = e.to_string();
            if let Err(rollback) = self.sink.truncate(self.len) {
                tracing::error!(error = %rollback, "could not roll back torn journal write");
            }
            tracing::error!(error = %reason, seq, "journal append failed");
            self.failure = Some(reason.clone());
            return Err(BankError::StorageFailure(reason));
        }
        self.last_seq = seq;
        self.len += bytes.len() as u64;
        Ok(seq)
    }
}
