//! Cheque status, stop-payment and cheque-book requests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::ledger::AccountId;

pub const ALLOWED_LEAVES: [u32; 2] = [25, 50];

/// First number handed out when books are dispatched.
pub const FIRST_CHEQUE_NO: u64 = 100_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChequeStatus {
    Unpaid,
    Paid,
    Stopped,
    Returned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cheque {
    pub account_id: AccountId,
    pub cheque_no: String,
    pub status: ChequeStatus,
    pub status_changed_at: Timestamp,
    pub paid_entry_id: Option<u64>,
}

impl Cheque {
    /// Guards the unpaid -> {paid, stopped, returned} machine.
    pub fn check_transition(&self, to: ChequeStatus) -> Result<()> {
        match (self.status, to) {
            (ChequeStatus::Unpaid, ChequeStatus::Paid | ChequeStatus::Stopped | ChequeStatus::Returned) => Ok(()),
            (ChequeStatus::Paid, _) => Err(BankError::AlreadyPaid),
            (ChequeStatus::Stopped, ChequeStatus::Paid | ChequeStatus::Returned) => {
                Err(BankError::ChequeStopped)
            }
            _ => Err(BankError::AlreadyTerminal),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChequeBookStatus {
    Queued,
    Dispatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChequeBookRequest {
    pub request_id: u64,
    pub account_id: AccountId,
    pub leaves: u32,
    pub requested_at: Timestamp,
    pub status: ChequeBookStatus,
    pub first_cheque_no: Option<String>,
}

pub fn check_leaves(leaves: u32) -> Result<()> {
    if ALLOWED_LEAVES.contains(&leaves) {
        Ok(())
    } else {
        Err(BankError::InvalidLeaves(leaves))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChequeRegister {
    /// Keyed by cheque number, which is unique bank-wide.
    pub cheques: BTreeMap<String, Cheque>,
    pub book_requests: BTreeMap<u64, ChequeBookRequest>,
    pub last_request_id: u64,
    pub next_cheque_no: u64,
}

impl ChequeRegister {
    pub fn cheque_on(&self, account: &AccountId, cheque_no: &str) -> Result<&Cheque> {
        self.cheques
            .get(cheque_no)
            .filter(|c| &c.account_id == account)
            .ok_or_else(|| BankError::UnknownCheque(cheque_no.to_string()))
    }

    pub fn next_number(&self) -> u64 {
        self.next_cheque_no.max(FIRST_CHEQUE_NO)
    }

    /// Registers `leaves` unpaid cheques for `account` starting at `first`.
    pub fn issue_range(&mut self, account: &AccountId, first: u64, leaves: u32, at: Timestamp) {
        for no in first..first + leaves as u64 {
            let cheque_no = no.to_string();
            self.cheques.insert(
                cheque_no.clone(),
                Cheque {
                    account_id: account.clone(),
                    cheque_no,
                    status: ChequeStatus::Unpaid,
                    status_changed_at: at,
                    paid_entry_id: None,
                },
            );
        }
        self.next_cheque_no = self.next_cheque_no.max(first + leaves as u64);
    }
}
