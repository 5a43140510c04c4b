//! Statement requests and their delivery channels.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::ledger::{AccountId, HistoryItem};
use crate::registry::{Named, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementChannel {
    Online,
    Email,
    Post,
}

impl StatementChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            StatementChannel::Online => "online",
            StatementChannel::Email => "email",
            StatementChannel::Post => "post",
        }
    }
}

impl FromStr for StatementChannel {
    type Err = BankError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "online" => Ok(StatementChannel::Online),
            "email" => Ok(StatementChannel::Email),
            "post" => Ok(StatementChannel::Post),
            other => Err(BankError::InvalidChannel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementStatus {
    Queued,
    Fulfilled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementRequest {
    pub request_id: u64,
    pub account_id: AccountId,
    pub channel: StatementChannel,
    pub requested_at: Timestamp,
    pub status: StatementStatus,
}

pub enum Delivery {
    /// Delivered in-band; carries the rendered body.
    Fulfilled(String),
    Queued,
}

/// How a statement reaches the customer for one channel.
pub trait StatementDelivery: Named + Send + Sync {
    fn deliver(&self, account: &AccountId, history: &[HistoryItem]) -> Delivery;
}

/// Renders the history immediately.
pub struct OnlineDelivery;

impl Named for OnlineDelivery {
    fn name(&self) -> &str {
        "online"
    }
}

impl StatementDelivery for OnlineDelivery {
    fn deliver(&self, account: &AccountId, history: &[HistoryItem]) -> Delivery {
        Delivery::Fulfilled(render_statement(account, history))
    }
}

/// Queues the request for an out-of-band process (mail room, e-mail batch).
pub struct DeferredDelivery(&'static str);

impl Named for DeferredDelivery {
    fn name(&self) -> &str {
        self.0
    }
}

impl StatementDelivery for DeferredDelivery {
    fn deliver(&self, _account: &AccountId, _history: &[HistoryItem]) -> Delivery {
        Delivery::Queued
    }
}

pub fn default_channels() -> Registry<dyn StatementDelivery> {
    let mut reg: Registry<dyn StatementDelivery> = Registry::new("statement channel");
    reg.register(Arc::new(OnlineDelivery));
    reg.register(Arc::new(DeferredDelivery("email")));
    reg.register(Arc::new(DeferredDelivery("post")));
    reg
}

pub fn render_statement(account: &AccountId, history: &[HistoryItem]) -> String {
    let mut out = format!("Statement for account {account}\n");
    for item in history {
        let _ = writeln!(
            out,
            "{}  #{:<6} {:<40} {}",
            Timestamp::to_datetime(item.posted_at).format("%Y-%m-%d"),
            item.entry_id,
            item.description,
            item.amount
        );
    }
    if history.is_empty() {
        out.push_str("No transactions in the last 90 days.\n");
    }
    out
}
