//! Funds transfers, bill payments and the value-date execution model.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use chrono::NaiveDate;
use parking_lot::Mutex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::ledger::{AccountId, CustomerId};
use crate::money::Money;
use crate::registry::{Named, Registry};

/// Maximum saved beneficiaries per customer.
pub const MAX_BENEFICIARIES: usize = 10;

pub const TOP_PAYEES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Beneficiary {
    pub beneficiary_id: u64,
    pub owner: CustomerId,
    pub account_no: String,
    pub nickname: String,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeneficiaryUpdate {
    pub account_no: Option<String>,
    pub nickname: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionStatus {
    Pending,
    Executed,
    Failed,
    Cancelled,
}

impl InstructionStatus {
    pub fn is_terminal(self) -> bool {
        self != InstructionStatus::Pending
    }
}

/// Where a transfer goes, as chosen by the customer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferTarget {
    Own { account_id: AccountId },
    Beneficiary { beneficiary_id: u64, account_no: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferInstruction {
    pub transfer_id: u64,
    pub owner: CustomerId,
    pub source_account: AccountId,
    pub target: TransferTarget,
    /// Ledger account credited on execution (an internal account or clearing).
    pub credit_account: AccountId,
    pub amount: Money,
    pub effective_date: NaiveDate,
    pub status: InstructionStatus,
    pub notify_email: Option<String>,
    pub created_at: Timestamp,
    pub finished_at: Option<Timestamp>,
    pub executed_entry_id: Option<u64>,
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistrationStatus {
    Active,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BillerRegistration {
    pub registration_id: u64,
    pub owner: CustomerId,
    pub corporation: String,
    pub bill_account_no: String,
    pub holder_name: String,
    pub status: RegistrationStatus,
    pub registered_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BillPayment {
    pub payment_id: u64,
    pub owner: CustomerId,
    pub payer_account: AccountId,
    pub credit_account: AccountId,
    pub corporation: String,
    pub bill_account_no: String,
    pub holder_name: String,
    pub amount: Money,
    pub bill_ref: Option<String>,
    pub effective_date: NaiveDate,
    pub registration_id: Option<u64>,
    pub status: InstructionStatus,
    pub created_at: Timestamp,
    pub finished_at: Option<Timestamp>,
    pub executed_entry_id: Option<u64>,
    pub failure_reason: Option<String>,
}

/// Everything the payments side persists.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentBook {
    pub beneficiaries: BTreeMap<u64, Beneficiary>,
    pub transfers: BTreeMap<u64, TransferInstruction>,
    pub registrations: BTreeMap<u64, BillerRegistration>,
    pub bill_payments: BTreeMap<u64, BillPayment>,
    /// Shared id sequence for transfers and bill payments so (date, id) orders both.
    pub last_instruction_id: u64,
    pub last_beneficiary_id: u64,
    pub last_registration_id: u64,
    pub last_processed_date: Option<NaiveDate>,
}

impl PaymentBook {
    pub fn beneficiaries_of<'a>(&'a self, owner: &'a CustomerId) -> Vec<&'a Beneficiary> {
        let mut list: Vec<_> = self
            .beneficiaries
            .values()
            .filter(|b| &b.owner == owner)
            .collect();
        list.sort_by_key(|b| (b.created_at, b.beneficiary_id));
        list
    }

    pub fn beneficiary_count(&self, owner: &CustomerId) -> usize {
        self.beneficiaries.values().filter(|b| &b.owner == owner).count()
    }

    pub fn owned_beneficiary(&self, owner: &CustomerId, id: u64) -> Result<&Beneficiary> {
        self.beneficiaries
            .get(&id)
            .filter(|b| &b.owner == owner)
            .ok_or_else(|| BankError::UnknownBeneficiary(id.to_string()))
    }

    pub fn active_registrations<'a>(&'a self, owner: &'a CustomerId) -> Vec<&'a BillerRegistration> {
        self.registrations
            .values()
            .filter(|r| &r.owner == owner && r.status == RegistrationStatus::Active)
            .collect()
    }

    pub fn owned_active_registration(&self, owner: &CustomerId, id: u64) -> Result<&BillerRegistration> {
        self.registrations
            .get(&id)
            .filter(|r| &r.owner == owner && r.status == RegistrationStatus::Active)
            .ok_or(BankError::UnknownRegistration(id))
    }

    /// Pending transfers of `owner`, by effective date then id.
    pub fn pending_transfers(&self, owner: &CustomerId) -> Vec<&TransferInstruction> {
        let mut list: Vec<_> = self
            .transfers
            .values()
            .filter(|t| &t.owner == owner && t.status == InstructionStatus::Pending)
            .collect();
        list.sort_by_key(|t| (t.effective_date, t.transfer_id));
        list
    }

    pub fn pending_payments(&self, owner: &CustomerId) -> Vec<&BillPayment> {
        let mut list: Vec<_> = self
            .bill_payments
            .values()
            .filter(|p| &p.owner == owner && p.status == InstructionStatus::Pending)
            .collect();
        list.sort_by_key(|p| (p.effective_date, p.payment_id));
        list
    }

    /// Every pending instruction due on or before `date`, in execution order.
    pub fn due(&self, date: NaiveDate) -> Vec<DueItem> {
        let mut due: Vec<DueItem> = self
            .transfers
            .values()
            .filter(|t| t.status == InstructionStatus::Pending && t.effective_date <= date)
            .map(|t| DueItem {
                effective_date: t.effective_date,
                instruction_id: t.transfer_id,
                kind: InstructionKind::Transfer,
            })
            .chain(
                self.bill_payments
                    .values()
                    .filter(|p| p.status == InstructionStatus::Pending && p.effective_date <= date)
                    .map(|p| DueItem {
                        effective_date: p.effective_date,
                        instruction_id: p.payment_id,
                        kind: InstructionKind::BillPayment,
                    }),
            )
            .collect();
        due.sort_by_key(|d| (d.effective_date, d.instruction_id));
        due
    }

    /// Corporations with the most executed bill payments, ties alphabetical.
    pub fn top_payees(&self) -> Vec<String> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for p in self.bill_payments.values() {
            if p.status == InstructionStatus::Executed {
                *counts.entry(p.corporation.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked
            .into_iter()
            .take(TOP_PAYEES)
            .map(|(name, _)| name.to_string())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionKind {
    Transfer,
    BillPayment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DueItem {
    pub effective_date: NaiveDate,
    pub instruction_id: u64,
    pub kind: InstructionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutedItem {
    pub instruction_id: u64,
    pub kind: InstructionKind,
    pub entry_id: u64,
    pub notify_email: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedItem {
    pub instruction_id: u64,
    pub kind: InstructionKind,
    pub reason: String,
    pub notify_email: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub business_date: Option<NaiveDate>,
    pub executed: usize,
    pub failed: usize,
    pub executed_items: Vec<ExecutedItem>,
    pub failed_items: Vec<FailedItem>,
}

/// A transaction authorization code bound to one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tac {
    pub code: String,
    pub session_token: String,
    pub issued_at: Timestamp,
    pub ttl_s: i64,
    pub used: bool,
}

impl Tac {
    pub fn is_expired(&self, now: Timestamp) -> bool {
        now.0 - self.issued_at.0 > self.ttl_s * 1000
    }
}

/// Outstanding TACs, in memory only.
#[derive(Debug, Default)]
pub struct TacStore {
    tacs: Mutex<Vec<Tac>>,
}

impl TacStore {
    pub fn new() -> Self {
        TacStore::default()
    }

    pub fn issue(&self, session_token: &str, ttl_s: i64, now: Timestamp) -> Tac {
        let code = format!("{:06}", rand::rng().random_range(0..1_000_000u32));
        let tac = Tac {
            code,
            session_token: session_token.to_string(),
            issued_at: now,
            ttl_s,
            used: false,
        };
        let mut tacs = self.tacs.lock();
        tacs.retain(|t| !t.used && !t.is_expired(now));
        tacs.push(tac.clone());
        tac
    }

    /// Checks that `code` is live for `session_token` without consuming it.
    pub fn check(&self, session_token: &str, code: &str, now: Timestamp) -> Result<()> {
        let tacs = self.tacs.lock();
        tacs.iter()
            .find(|t| {
                t.session_token == session_token && t.code == code && !t.used && !t.is_expired(now)
            })
            .map(|_| ())
            .ok_or(BankError::InvalidTac)
    }

    /// Marks the code used. Fails if it is not live for this session.
    pub fn consume(&self, session_token: &str, code: &str, now: Timestamp) -> Result<()> {
        let mut tacs = self.tacs.lock();
        let tac = tacs
            .iter_mut()
            .find(|t| {
                t.session_token == session_token && t.code == code && !t.used && !t.is_expired(now)
            })
            .ok_or(BankError::InvalidTac)?;
        tac.used = true;
        Ok(())
    }

    pub fn revoke_session(&self, session_token: &str) {
        self.tacs.lock().retain(|t| t.session_token != session_token);
    }
}

/// Delivery hook for the optional e-mail notification on transfers.
pub trait Notifier: Named + Send + Sync {
    fn notify(&self, email: &str, subject: &str, body: &str);
}

/// Writes notifications to the service log.
pub struct LogNotifier;

impl Named for LogNotifier {
    fn name(&self) -> &str {
        "log"
    }
}

impl Notifier for LogNotifier {
    fn notify(&self, email: &str, subject: &str, body: &str) {
        tracing::info!(%email, %subject, %body, "transfer notification");
    }
}

pub struct NullNotifier;

impl Named for NullNotifier {
    fn name(&self) -> &str {
        "null"
    }
}

impl Notifier for NullNotifier {
    fn notify(&self, _email: &str, _subject: &str, _body: &str) {}
}

pub fn default_notifiers() -> Registry<dyn Notifier> {
    let mut reg: Registry<dyn Notifier> = Registry::new("notifier");
    reg.register(Arc::new(LogNotifier));
    reg.register(Arc::new(NullNotifier));
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn payment(id: u64, corp: &str, status: InstructionStatus) -> BillPayment {
        BillPayment {
            payment_id: id,
            owner: CustomerId("C".into()),
            payer_account: AccountId::new("A"),
            credit_account: AccountId::new("CLEARING-MYR"),
            corporation: corp.into(),
            bill_account_no: "1".into(),
            holder_name: "h".into(),
            amount: Money::myr(1),
            bill_ref: None,
            effective_date: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(),
            registration_id: None,
            status,
            created_at: Timestamp(0),
            finished_at: None,
            executed_entry_id: None,
            failure_reason: None,
        }
    }

    #[test]
    fn top_payees_count_then_alphabetical() {
        let mut book = PaymentBook::default();
        assert!(book.top_payees().is_empty());
        let mut id = 0;
        for (corp, n) in [("A", 3), ("B", 5), ("C", 3)] {
            for _ in 0..n {
                id += 1;
                book.bill_payments
                    .insert(id, payment(id, corp, InstructionStatus::Executed));
            }
        }
        // non-executed payments do not count
        for _ in 0..10 {
            id += 1;
            book.bill_payments
                .insert(id, payment(id, "Z", InstructionStatus::Failed));
        }
        assert_eq!(book.top_payees(), ["B", "A", "C"]);
    }

    #[test]
    fn tac_single_use_and_session_bound() {
        let store = TacStore::new();
        let tac = store.issue("s1", 300, Timestamp(0));
        assert_eq!(tac.code.len(), 6);
        assert!(tac.code.chars().all(|c| c.is_ascii_digit()));
        assert_eq!(store.consume("s2", &tac.code, Timestamp(0)), Err(BankError::InvalidTac));
        store.consume("s1", &tac.code, Timestamp(0)).unwrap();
        assert_eq!(store.consume("s1", &tac.code, Timestamp(0)), Err(BankError::InvalidTac));
    }

    #[test]
    fn tac_expires() {
        let store = TacStore::new();
        let tac = store.issue("s1", 300, Timestamp(0));
        assert!(store.check("s1", &tac.code, Timestamp(300_000)).is_ok());
        assert_eq!(store.check("s1", &tac.code, Timestamp(300_001)), Err(BankError::InvalidTac));
    }
}
