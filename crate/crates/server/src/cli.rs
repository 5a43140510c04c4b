//! The `bank` command.
//!
//! Maintenance subcommands open the data directory directly, so run them while
//! the server is stopped: the journal has a single writer.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use bank_core::backup::verify_offsite;
use bank_core::journal::read_journal_file;
use bank_core::snapshot::{DataDir, SnapshotMode};
use bank_core::state::BankState;
use bank_core::Bank;
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::ServerConfig;
use crate::seed::{self, Fixture};

#[derive(Debug, Parser)]
#[command(name = "bank", version, about = "Internet banking server and maintenance tool")]
pub struct Cli {
    /// Configuration file (the BANK_CONFIG environment variable takes precedence).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the JSON API.
    Serve,
    /// Rebuild state from snapshots and journal and print a report.
    Recover {
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Also check every snapshot checksum and compare against a full journal replay when possible.
        #[arg(long)]
        verify: bool,
    },
    /// Take a snapshot now.
    Backup {
        #[arg(long, value_parser = parse_mode)]
        mode: SnapshotMode,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Copy the data directory off-site and verify the copy.
    Offsite {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Execute pending instructions due on or before DATE (YYYY-MM-DD).
    RunValueDate {
        date: NaiveDate,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Load customers and accounts from a TOML fixture.
    Seed {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<SnapshotMode, String> {
    s.parse().map_err(|e: bank_core::BankError| e.to_string())
}

fn open(config: &ServerConfig, data_dir: Option<&Path>) -> anyhow::Result<Bank> {
    let dir = data_dir.unwrap_or(&config.data_dir);
    let (bank, report) = Bank::builder(config.bank.clone())
        .open(dir)
        .with_context(|| format!("opening data directory {}", dir.display()))?;
    if report.discarded_tail > 0 {
        tracing::warn!(discarded = report.discarded_tail, "torn journal tail discarded during recovery");
    }
    Ok(bank)
}

fn print(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = ServerConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Serve => serve(config),
        Command::Recover { data_dir, verify } => {
            let data = DataDir::new(data_dir.unwrap_or(config.data_dir.clone()));
            let recovered = data.recover()?;
            if verify {
                verify_data_dir(&data, &recovered.state)?;
            }
            print(&json!({
                "last_seq": recovered.last_seq,
                "customers": recovered.state.customers.len(),
                "entries": recovered.state.ledger.entries().len(),
                "report": recovered.report,
                "verified": verify,
            }))
        }
        Command::Backup { mode, data_dir } => {
            let bank = open(&config, data_dir.as_deref())?;
            print(&bank.snapshot(mode)?)
        }
        Command::Offsite { target, data_dir } => {
            let bank = open(&config, data_dir.as_deref())?;
            print(&bank.offsite_copy(&target)?)
        }
        Command::RunValueDate { date, data_dir } => {
            let bank = open(&config, data_dir.as_deref())?;
            print(&bank.run_value_date(date)?)
        }
        Command::Seed { fixture, data_dir } => {
            let text = std::fs::read_to_string(&fixture)
                .with_context(|| format!("reading {}", fixture.display()))?;
            let bank = open(&config, data_dir.as_deref())?;
            print(&seed::apply(&bank, &Fixture::from_toml(&text)?)?)
        }
    }
}

/// Checks every snapshot in the manifest and, when the journal still starts at
/// the first event, that replaying it alone gives the recovered state.
fn verify_data_dir(data: &DataDir, recovered: &BankState) -> anyhow::Result<()> {
    for meta in data.manifest()? {
        data.load_snapshot(&meta)
            .with_context(|| format!("snapshot {}", meta.snapshot_id))?;
    }
    let journal = read_journal_file(&data.journal_path())?;
    if journal.records.first().is_some_and(|r| r.seq == 1) {
        let events = journal.records.iter().map(|r| r.event()).collect::<Result<Vec<_>, _>>()?;
        if BankState::replay(events.iter())? != *recovered {
            bail!("journal replay disagrees with snapshot recovery");
        }
    }
    // an off-site style self-check: the directory must recover to itself
    verify_offsite(data, data.root())?;
    Ok(())
}

fn serve(config: ServerConfig) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let bank = Arc::new(open(&config, None)?);
        if let Some(admin) = &config.admin {
            if bank.bootstrap_admin(&admin.username, &admin.password)? {
                tracing::info!(username = %admin.username, "administrator created");
            }
        }
        crate::jobs::spawn(bank.clone(), config.backup.clone(), Duration::from_secs(config.tick_s))?;
        let listener = tokio::net::TcpListener::bind(&config.listen)
            .await
            .with_context(|| format!("binding {}", config.listen))?;
        tracing::info!(addr = %listener.local_addr()?, "listening");
        axum::serve(listener, crate::api::router(bank))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
