//! Off-site copies and the automated backup schedule.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::registry::{Named, Registry};
use crate::snapshot::{DataDir, SnapshotMeta, SnapshotMode, SNAPSHOT_DIR};

/// Chooses the mode of the `run`-th scheduled backup (0-based).
pub trait ModePolicy: Named + Send + Sync {
    fn mode_for(&self, run: u64, complete_every: u64) -> SnapshotMode;
}

pub struct AlwaysComplete;

impl Named for AlwaysComplete {
    fn name(&self) -> &str {
        "always-complete"
    }
}

impl ModePolicy for AlwaysComplete {
    fn mode_for(&self, _run: u64, _complete_every: u64) -> SnapshotMode {
        SnapshotMode::Complete
    }
}

/// Incremental every time; the scheduler still opens with a complete one when no base exists.
pub struct AlwaysIncremental;

impl Named for AlwaysIncremental {
    fn name(&self) -> &str {
        "always-incremental"
    }
}

impl ModePolicy for AlwaysIncremental {
    fn mode_for(&self, _run: u64, _complete_every: u64) -> SnapshotMode {
        SnapshotMode::Incremental
    }
}

/// Complete on runs 0, n, 2n, ... and incremental in between.
pub struct CompleteEveryN;

impl Named for CompleteEveryN {
    fn name(&self) -> &str {
        "complete-every-n"
    }
}

impl ModePolicy for CompleteEveryN {
    fn mode_for(&self, run: u64, complete_every: u64) -> SnapshotMode {
        if run.is_multiple_of(complete_every.max(1)) {
            SnapshotMode::Complete
        } else {
            SnapshotMode::Incremental
        }
    }
}

pub fn default_mode_policies() -> Registry<dyn ModePolicy> {
    let mut r: Registry<dyn ModePolicy> = Registry::new("backup mode policy");
    r.register(Arc::new(AlwaysComplete))
        .register(Arc::new(AlwaysIncremental))
        .register(Arc::new(CompleteEveryN));
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackupConfig {
    pub interval_s: i64,
    pub mode_policy: String,
    pub complete_every: u64,
    pub offsite_target: Option<PathBuf>,
}

impl Default for BackupConfig {
    fn default() -> Self {
        BackupConfig {
            interval_s: 3600,
            mode_policy: "complete-every-n".into(),
            complete_every: 24,
            offsite_target: None,
        }
    }
}

impl BackupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interval_s <= 0 {
            return Err(BankError::InvalidConfig("backup interval_s must be positive".into()));
        }
        if self.complete_every == 0 {
            return Err(BankError::InvalidConfig("complete_every must be positive".into()));
        }
        Ok(())
    }
}

/// What the scheduler backs up. Implemented by the bank; tests use fakes.
pub trait BackupTarget {
    fn snapshot(&self, mode: SnapshotMode) -> Result<SnapshotMeta>;
    fn offsite_copy(&self, target: &Path) -> Result<OffsiteReport>;
}

impl BackupTarget for crate::bank::Bank {
    fn snapshot(&self, mode: SnapshotMode) -> Result<SnapshotMeta> {
        crate::bank::Bank::snapshot(self, mode)
    }

    fn offsite_copy(&self, target: &Path) -> Result<OffsiteReport> {
        crate::bank::Bank::offsite_copy(self, target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickOutcome {
    pub snapshot: SnapshotMeta,
    /// `None` when no off-site target is configured.
    pub offsite: Option<Result<OffsiteReport>>,
}

pub struct BackupScheduler {
    config: BackupConfig,
    policy: Arc<dyn ModePolicy>,
    last_backup: Option<Timestamp>,
    runs: u64,
}

impl BackupScheduler {
    pub fn new(config: BackupConfig) -> Result<Self> {
        Self::with_policies(config, &default_mode_policies())
    }

    pub fn with_policies(config: BackupConfig, policies: &Registry<dyn ModePolicy>) -> Result<Self> {
        config.validate()?;
        let policy = policies.get(&config.mode_policy)?;
        Ok(BackupScheduler {
            config,
            policy,
            last_backup: None,
            runs: 0,
        })
    }

    pub fn last_backup(&self) -> Option<Timestamp> {
        self.last_backup
    }

    pub fn is_due(&self, now: Timestamp) -> bool {
        self.last_backup
            .is_none_or(|last| now.millis() - last.millis() >= self.config.interval_s * 1000)
    }

    /// Takes a backup if the interval has elapsed. A failed snapshot is logged
    /// and left due so the next tick retries it; an off-site failure does not
    /// undo the local snapshot.
    pub fn tick(&mut self, now: Timestamp, target: &dyn BackupTarget) -> Option<TickOutcome> {
        if !self.is_due(now) {
            return None;
        }
        let mode = self.policy.mode_for(self.runs, self.config.complete_every);
        let snapshot = match target.snapshot(mode) {
            Err(BankError::NoBase) if mode == SnapshotMode::Incremental => target.snapshot(SnapshotMode::Complete),
            other => other,
        };
        let snapshot = match snapshot {
            Ok(meta) => meta,
            Err(e) => {
                tracing::error!(error = %e, "scheduled backup failed; retrying next tick");
                return None;
            }
        };
        self.last_backup = Some(now);
        self.runs += 1;
        tracing::info!(id = snapshot.snapshot_id, mode = %snapshot.mode, upto = snapshot.upto_seq, "backup taken");
        let offsite = self.config.offsite_target.as_deref().map(|dir| {
            let result = target.offsite_copy(dir);
            if let Err(e) = &result {
                tracing::error!(error = %e, target = %dir.display(), "off-site copy failed; local backup kept");
            }
            result
        });
        Some(TickOutcome { snapshot, offsite })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsiteReport {
    pub target: PathBuf,
    pub files: usize,
    pub bytes: u64,
    /// Journal sequence reached by recovering the copy.
    pub verified_seq: u64,
}

fn files_to_copy(data: &DataDir) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for dir in [data.root().to_path_buf(), data.snapshot_dir()] {
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
            Err(e) => return Err(BankError::storage(e)),
        };
        for entry in entries {
            let entry = entry.map_err(BankError::storage)?;
            if entry.file_type().map_err(BankError::storage)?.is_file() {
                let name = entry.file_name();
                // skip half-written temporaries
                if !name.to_string_lossy().ends_with(".tmp") {
                    files.push(entry.path());
                }
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Copies the data directory to `target`, checks every file by CRC and
/// proves the copy recovers to the same journal position.
pub fn offsite_copy(data: &DataDir, target: &Path) -> Result<OffsiteReport> {
    let unwritable = |e: std::io::Error| BankError::TargetUnwritable(format!("{}: {e}", target.display()));
    fs::create_dir_all(target.join(SNAPSHOT_DIR)).map_err(unwritable)?;
    let mut bytes = 0;
    let files = files_to_copy(data)?;
    for src in &files {
        let rel = src.strip_prefix(data.root()).expect("listed under root");
        let contents = fs::read(src).map_err(BankError::storage)?;
        bytes += contents.len() as u64;
        crate::snapshot::write_atomically(&target.join(rel), &contents)
            .map_err(|e| BankError::TargetUnwritable(e.to_string()))?;
    }
    let verified_seq = verify_offsite(data, target)?;
    Ok(OffsiteReport {
        target: target.to_path_buf(),
        files: files.len(),
        bytes,
        verified_seq,
    })
}

/// Checks a copy file-by-file against the source and recovers it.
pub fn verify_offsite(data: &DataDir, target: &Path) -> Result<u64> {
    for src in files_to_copy(data)? {
        let rel = src.strip_prefix(data.root()).expect("listed under root");
        let original = fs::read(&src).map_err(BankError::storage)?;
        let copy = fs::read(target.join(rel))
            .map_err(|e| BankError::VerifyFailed(format!("{}: {e}", rel.display())))?;
        if crc32fast::hash(&original) != crc32fast::hash(&copy) || original.len() != copy.len() {
            return Err(BankError::VerifyFailed(format!("{} differs from source", rel.display())));
        }
    }
    let source = data.recover()?;
    let copy = DataDir::new(target)
        .recover()
        .map_err(|e| BankError::VerifyFailed(format!("copy does not recover: {e}")))?;
    if copy.last_seq != source.last_seq || copy.state != source.state {
        return Err(BankError::VerifyFailed("recovered copy differs from source".into()));
    }
    Ok(copy.last_seq)
}
