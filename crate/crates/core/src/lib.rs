//! Core of an internet banking service.
//!
//! Double-entry ledger, customer identity and sessions, funds transfers and
//! bill payments, cheque services, and an event journal with snapshots and
//! off-site backups. [`Bank`] is the entry point; the HTTP layer lives in a
//! separate crate.

pub mod backup;
pub mod bank;
pub mod cheques;
pub mod clock;
pub mod error;
pub mod identity;
pub mod journal;
pub mod ledger;
pub mod money;
pub mod payments;
pub mod registry;
pub mod snapshot;
pub mod state;
pub mod statements;

pub use bank::{Bank, BankBuilder, BankConfig};
pub use clock::{Clock, ManualClock, SystemClock, Timestamp};
pub use error::{BankError, Result};
pub use ledger::{AccountId, CustomerId};
pub use money::{Currency, Money};
