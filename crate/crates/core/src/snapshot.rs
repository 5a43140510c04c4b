//! Complete and incremental snapshots, the snapshot manifest, and recovery.
//!
//! Layout of a data directory:
//!
//! ```text
//! journal.log            checksummed event records
//! snapshots/<id>.snap    JSON body followed by a little-endian u32 CRC32 of the body
//! snapshots/manifest     one descriptor per line:
//!                        <id> <complete|incremental> <base id or -> <upto_seq> <created_at millis> <crc hex>
//! ```

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::journal::{encode_record, read_journal_file, DecodedJournal};
use crate::state::{BankState, Event};

pub const JOURNAL_FILE: &str = "journal.log";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const MANIFEST_FILE: &str = "manifest";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotMode {
    Complete,
    Incremental,
}

impl SnapshotMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SnapshotMode::Complete => "complete",
            SnapshotMode::Incremental => "incremental",
        }
    }
}

impl fmt::Display for SnapshotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SnapshotMode {
    type Err = BankError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(SnapshotMode::Complete),
            "incremental" => Ok(SnapshotMode::Incremental),
            other => Err(BankError::InvalidConfig(format!("unknown snapshot mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub snapshot_id: u64,
    pub mode: SnapshotMode,
    pub base_snapshot_id: Option<u64>,
    pub upto_seq: u64,
    pub created_at: Timestamp,
    pub checksum: u32,
}

impl SnapshotMeta {
    fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {:08x}",
            self.snapshot_id,
            self.mode,
            self.base_snapshot_id
                .map_or_else(|| "-".to_string(), |b| b.to_string()),
            self.upto_seq,
            self.created_at.0,
            self.checksum
        )
    }

    fn parse_line(line: &str) -> Result<Self> {
        let bad = || BankError::CorruptSnapshot(format!("bad manifest line {line:?}"));
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [id, mode, base, upto, created, crc] = parts[..] else {
            return Err(bad());
        };
        Ok(SnapshotMeta {
            snapshot_id: id.parse().map_err(|_| bad())?,
            mode: mode.parse().map_err(|_| bad())?,
            base_snapshot_id: match base {
                "-" => None,
                b => Some(b.parse().map_err(|_| bad())?),
            },
            upto_seq: upto.parse().map_err(|_| bad())?,
            created_at: Timestamp(created.parse().map_err(|_| bad())?),
            checksum: u32::from_str_radix(crc, 16).map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEvent {
    pub seq: u64,
    pub written_at: Timestamp,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
// externally tagged: internal tags buffer the body, which breaks integer map keys
#[serde(rename_all = "snake_case")]
pub enum SnapshotBody {
    Complete { upto_seq: u64, state: Box<BankState> },
    /// Events in `(base upto_seq, upto_seq]`.
    Incremental { from_seq: u64, upto_seq: u64, events: Vec<SnapshotEvent> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// Snapshot ids loaded, oldest first.
    pub snapshot_chain: Vec<u64>,
    /// Journal events replayed on top of the snapshot chain.
    pub events: usize,
    pub discarded_tail: usize,
    /// Snapshots skipped because they failed verification.
    pub corrupt_snapshots: Vec<u64>,
    pub last_seq: u64,
}

pub struct Recovered {
    pub state: BankState,
    pub last_seq: u64,
    /// Byte length of the verified journal prefix.
    pub journal_valid_len: u64,
    pub report: RecoveryReport,
}

/// A bank data directory on disk.
#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn journal_path(&self) -> PathBuf {
        self.root.join(JOURNAL_FILE)
    }

    pub fn snapshot_dir(&self) -> PathBuf {
        self.root.join(SNAPSHOT_DIR)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.snapshot_dir().join(MANIFEST_FILE)
    }

    pub fn snapshot_path(&self, id: u64) -> PathBuf {
        self.snapshot_dir().join(format!("{id}.snap"))
    }

    pub fn create(&self) -> Result<()> {
        fs::create_dir_all(self.snapshot_dir()).map_err(BankError::storage)
    }

    pub fn manifest(&self) -> Result<Vec<SnapshotMeta>> {
        let text = match fs::read_to_string(self.manifest_path()) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(BankError::storage(e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(SnapshotMeta::parse_line)
            .collect()
    }

    fn write_manifest(&self, metas: &[SnapshotMeta]) -> Result<()> {
        let mut text = String::new();
        for m in metas {
            text.push_str(&m.to_line());
            text.push('\n');
        }
        write_atomically(&self.manifest_path(), text.as_bytes())
    }

    pub fn journal(&self) -> Result<DecodedJournal> {
        read_journal_file(&self.journal_path())
    }

    /// Writes a snapshot of `state` (as of `upto_seq`) in the requested mode.
    pub fn write_snapshot(
        &self,
        mode: SnapshotMode,
        state: &BankState,
        upto_seq: u64,
        created_at: Timestamp,
    ) -> Result<SnapshotMeta> {
        self.create()?;
        let mut metas = self.manifest()?;
        let base = metas.last().cloned();
        let snapshot_id = base.as_ref().map_or(1, |b| b.snapshot_id + 1);
        let body = match mode {
            SnapshotMode::Complete => SnapshotBody::Complete {
                upto_seq,
                state: Box::new(state.clone()),
            },
            SnapshotMode::Incremental => {
                let base = base.as_ref().ok_or(BankError::NoBase)?;
                let journal = self.journal()?;
                let events = journal
                    .records
                    .iter()
                    .filter(|r| r.seq > base.upto_seq && r.seq <= upto_seq)
                    .map(|r| {
                        Ok(SnapshotEvent {
                            seq: r.seq,
                            written_at: r.written_at,
                            event: r.event()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let expected = upto_seq.saturating_sub(base.upto_seq) as usize;
                if events.len() != expected {
                    return Err(BankError::CorruptJournal(format!(
                        "journal holds {} of the {expected} events since snapshot {}",
                        events.len(),
                        base.snapshot_id
                    )));
                }
                SnapshotBody::Incremental {
                    from_seq: base.upto_seq + 1,
                    upto_seq,
                    events,
                }
            }
        };
        let bytes = serde_json::to_vec(&body).map_err(BankError::storage)?;
        let checksum = crc32fast::hash(&bytes);
        let mut file = bytes;
        file.extend_from_slice(&checksum.to_le_bytes());
        write_atomically(&self.snapshot_path(snapshot_id), &file)?;

        let meta = SnapshotMeta {
            snapshot_id,
            mode,
            base_snapshot_id: match mode {
                SnapshotMode::Complete => None,
                SnapshotMode::Incremental => base.map(|b| b.snapshot_id),
            },
            upto_seq,
            created_at,
            checksum,
        };
        metas.push(meta.clone());
        self.write_manifest(&metas)?;
        Ok(meta)
    }

    /// Loads and verifies one snapshot body against its manifest entry.
    pub fn load_snapshot(&self, meta: &SnapshotMeta) -> Result<SnapshotBody> {
        let id = meta.snapshot_id;
        let bad = |why: &str| BankError::CorruptSnapshot(format!("snapshot {id}: {why}"));
        let bytes = fs::read(self.snapshot_path(id)).map_err(|e| bad(&e.to_string()))?;
        if bytes.len() < 4 {
            return Err(bad("truncated"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().unwrap());
        let actual = crc32fast::hash(body);
        if stored != actual || actual != meta.checksum {
            return Err(bad("checksum mismatch"));
        }
        let body: SnapshotBody = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
        let upto = match &body {
            SnapshotBody::Complete { upto_seq, .. } | SnapshotBody::Incremental { upto_seq, .. } => *upto_seq,
        };
        if upto != meta.upto_seq {
            return Err(bad("upto_seq disagrees with manifest"));
        }
        Ok(body)
    }

    /// Rewrites the journal keeping only records after `upto_seq`.
    pub fn compact_journal(&self, upto_seq: u64) -> Result<usize> {
        let journal = self.journal()?;
        let mut bytes = Vec::new();
        let mut dropped = 0;
        for r in &journal.records {
            if r.seq > upto_seq {
                bytes.extend_from_slice(&encode_record(r.seq, r.written_at, &r.payload));
            } else {
                dropped += 1;
            }
        }
        write_atomically(&self.journal_path(), &bytes)?;
        Ok(dropped)
    }

    /// Rebuilds state from the newest verifiable snapshot chain plus the journal tail.
    pub fn recover(&self) -> Result<Recovered> {
        let journal = self.journal()?;
        let metas = self.manifest()?;
        let journal_first = journal.records.first().map(|r| r.seq);
        let journal_last = journal.records.last().map(|r| r.seq);

        let mut report = RecoveryReport {
            discarded_tail: journal.discarded_tail,
            ..RecoveryReport::default()
        };
        if journal.discarded_tail > 0 {
            tracing::warn!("discarded torn record at end of journal");
        }

        // Newest complete snapshot first; fall back to older chains on damage.
        let completes: Vec<usize> = metas
            .iter()
            .enumerate()
            .filter(|(_, m)| m.mode == SnapshotMode::Complete)
            .map(|(i, _)| i)
            .rev()
            .collect();

        let mut chosen: Option<(BankState, u64, Vec<u64>)> = None;
        for &start in &completes {
            let meta = &metas[start];
            let body = match self.load_snapshot(meta) {
                Ok(b) => b,
                Err(e) => {
                    tracing::warn!(error = %e, "skipping corrupt snapshot");
                    report.corrupt_snapshots.push(meta.snapshot_id);
                    continue;
                }
            };
            let SnapshotBody::Complete { state, upto_seq } = body else {
                report.corrupt_snapshots.push(meta.snapshot_id);
                continue;
            };
            let mut state = *state;
            let mut upto = upto_seq;
            let mut chain = vec![meta.snapshot_id];
            for next in &metas[start + 1..] {
                if next.mode != SnapshotMode::Incremental
                    || next.base_snapshot_id != chain.last().copied()
                {
                    break;
                }
                let applied = self.load_snapshot(next).and_then(|body| match body {
                    SnapshotBody::Incremental {
                        from_seq, events, ..
                    } if from_seq == upto + 1 => {
                        let mut candidate = state.clone();
                        for (i, e) in events.iter().enumerate() {
                            if e.seq != from_seq + i as u64 {
                                return Err(BankError::CorruptSnapshot("event gap".into()));
                            }
                            candidate.apply(&e.event)?;
                        }
                        Ok(candidate)
                    }
                    _ => Err(BankError::CorruptSnapshot("chain mismatch".into())),
                });
                match applied {
                    Ok(s) => {
                        state = s;
                        upto = next.upto_seq;
                        chain.push(next.snapshot_id);
                    }
                    Err(e) => {
                        tracing::warn!(error = %e, id = next.snapshot_id, "incremental snapshot unusable");
                        report.corrupt_snapshots.push(next.snapshot_id);
                        break;
                    }
                }
            }
            // The journal must continue where the chain stops.
            let covered = match (journal_first, journal_last) {
                (Some(first), Some(last)) => first <= upto + 1 || last <= upto,
                _ => true,
            };
            if covered {
                chosen = Some((state, upto, chain));
                break;
            }
            tracing::warn!(upto, "journal does not reach back to snapshot chain");
        }

        let (mut state, mut last_seq, chain) = match chosen {
            Some(c) => c,
            None => {
                // snapshots claiming history the journal no longer holds
                let claimed = metas.iter().map(|m| m.upto_seq).max().unwrap_or(0);
                let journal_gap = match journal_first {
                    Some(first) => first != 1,
                    None => claimed > 0,
                };
                if journal_gap {
                    return Err(if report.corrupt_snapshots.is_empty() {
                        BankError::CorruptJournal(format!(
                            "journal starts at seq {} with no usable snapshot",
                            journal_first.unwrap_or(0)
                        ))
                    } else {
                        BankError::CorruptSnapshot(format!(
                            "no usable snapshot chain (damaged: {:?})",
                            report.corrupt_snapshots
                        ))
                    });
                }
                (BankState::new(), 0, Vec::new())
            }
        };
        report.snapshot_chain = chain;

        let resume_after = last_seq;
        for record in journal.records.iter().filter(|r| r.seq > resume_after) {
            if record.seq != last_seq + 1 {
                return Err(BankError::CorruptJournal(format!(
                    "expected seq {}, found {}",
                    last_seq + 1,
                    record.seq
                )));
            }
            state.apply(&record.event()?)?;
            last_seq = record.seq;
            report.events += 1;
        }
        report.last_seq = last_seq;

        Ok(Recovered {
            state,
            last_seq,
            journal_valid_len: journal.valid_len,
            report,
        })
    }
}

/// Replaces `path` with `bytes` via a synced temporary file and rename.
pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(BankError::storage)?;
    f.write_all(bytes).map_err(BankError::storage)?;
    f.sync_all().map_err(BankError::storage)?;
    drop(f);
    fs::rename(&tmp, path).map_err(BankError::storage)?;
    if let Some(parent) = path.parent() {
        if let Ok(dir) = fs::File::open(parent) {
            let _ = dir.sync_all();
        }
    }
    Ok(())
}
