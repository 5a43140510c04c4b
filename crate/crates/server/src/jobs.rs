//! Background work while serving: value-date runs, backups and session sweeps.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use bank_core::backup::{BackupConfig, BackupScheduler};
use bank_core::Bank;

/// Closes every business day up to today that has not been processed yet.
pub fn value_date_tick(bank: &Bank) {
    let today = bank.today();
    let behind = bank.with_state(|s| s.payments.last_processed_date.is_none_or(|last| last < today));
    if behind {
        match bank.run_value_date(today) {
            Ok(report) => tracing::info!(
                date = %today,
                executed = report.executed,
                failed = report.failed,
                "value date processed"
            ),
            Err(e) => tracing::error!(error = %e, "value-date run failed"),
        }
    }
}

/// One pass of every periodic job.
pub fn run_once(bank: &Bank, scheduler: &mut BackupScheduler) {
    value_date_tick(bank);
    if bank.data_dir().is_some() {
        scheduler.tick(bank.now(), bank);
    }
    let swept = bank.sweep_sessions();
    if swept > 0 {
        tracing::debug!(swept, "idle sessions removed");
    }
}

pub fn spawn(bank: Arc<Bank>, backup: BackupConfig, every: Duration) -> anyhow::Result<()> {
    let scheduler = Arc::new(Mutex::new(BackupScheduler::new(backup)?));
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(every);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            interval.tick().await;
            let (bank, scheduler) = (bank.clone(), scheduler.clone());
            let pass = tokio::task::spawn_blocking(move || {
                let mut scheduler = scheduler.lock().unwrap_or_else(|p| p.into_inner());
                run_once(&bank, &mut scheduler);
            });
            if let Err(e) = pass.await {
                tracing::error!(error = %e, "background pass panicked");
            }
        }
    });
    Ok(())
}
