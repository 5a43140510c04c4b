//! Double-entry ledger: accounts, postings, derived balances and the
//! customer-visible history window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::money::{Currency, Money};

/// Customers can see at most this many days of history.
pub const RETENTION_DAYS: i64 = 90;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub String);

impl AccountId {
    pub fn new(id: impl Into<String>) -> Self {
        AccountId(id.into())
    }

    /// The account standing in for every external party in `currency`.
    pub fn clearing(currency: Currency) -> Self {
        AccountId(format!("CLEARING-{currency}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CustomerId(pub String);

impl fmt::Display for CustomerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountKind {
    Current,
    Saving,
    CreditCard,
    /// Internal counterpart for external parties. Never customer-owned.
    Clearing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountStatus {
    Active,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: AccountId,
    pub customer_id: Option<CustomerId>,
    pub kind: AccountKind,
    pub status: AccountStatus,
    pub opened_at: Timestamp,
    pub currency: Currency,
    /// Credit cards only; zero otherwise.
    pub credit_limit: Money,
}

impl Account {
    pub fn is_owned_by(&self, customer: &CustomerId) -> bool {
        self.customer_id.as_ref() == Some(customer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Transfer,
    BillPayment,
    Cheque,
    Deposit,
    Adjustment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub entry_id: u64,
    pub account_id: AccountId,
    /// Positive credits the account, negative debits it.
    pub amount: Money,
    pub ordinal: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub entry_id: u64,
    pub posted_at: Timestamp,
    pub kind: EntryKind,
    pub description: String,
    pub postings: Vec<Posting>,
}

impl LedgerEntry {
    /// Net effect of this entry on `account`.
    pub fn net_for(&self, account: &AccountId) -> i64 {
        self.postings
            .iter()
            .filter(|p| &p.account_id == account)
            .map(|p| p.amount.amount_minor)
            .sum()
    }

    pub fn touches(&self, account: &AccountId) -> bool {
        self.postings.iter().any(|p| &p.account_id == account)
    }
}

/// An entry before it has been assigned an id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDraft {
    pub kind: EntryKind,
    pub description: String,
    pub legs: Vec<(AccountId, Money)>,
}

impl EntryDraft {
    pub fn new(kind: EntryKind, description: impl Into<String>) -> Self {
        EntryDraft {
            kind,
            description: description.into(),
            legs: Vec::new(),
        }
    }

    pub fn leg(mut self, account: AccountId, amount: Money) -> Self {
        self.legs.push((account, amount));
        self
    }

    /// Moves `amount` from `from` to `to`.
    pub fn between(
        kind: EntryKind,
        description: impl Into<String>,
        from: AccountId,
        to: AccountId,
        amount: Money,
    ) -> Result<Self> {
        Ok(EntryDraft::new(kind, description)
            .leg(from, amount.checked_neg()?)
            .leg(to, amount))
    }
}

/// What a customer sees for one history line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryItem {
    pub entry_id: u64,
    pub posted_at: Timestamp,
    pub kind: EntryKind,
    pub description: String,
    /// Net amount credited (positive) or debited (negative) to the queried account.
    pub amount: Money,
}

/// Clamp a customer-requested date window to the retention horizon and `now`.
///
/// Returns `None` when nothing can possibly match.
pub fn retention_window(
    from: NaiveDate,
    to: NaiveDate,
    now: Timestamp,
) -> Result<Option<(Timestamp, Timestamp)>> {
    if from > to {
        return Err(BankError::InvalidRange);
    }
    let lo = Timestamp::start_of(from).max(now.minus_days(RETENTION_DAYS));
    let hi = Timestamp::end_of(to).min(now);
    Ok((lo <= hi).then_some((lo, hi)))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ledger {
    accounts: BTreeMap<AccountId, Account>,
    entries: Vec<LedgerEntry>,
    /// Running sum of postings per account.
    sums: BTreeMap<AccountId, i64>,
    /// Entry positions touching each account, ascending.
    by_account: BTreeMap<AccountId, Vec<usize>>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn account(&self, id: &AccountId) -> Result<&Account> {
        self.accounts
            .get(id)
            .ok_or_else(|| BankError::UnknownAccount(id.to_string()))
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn accounts_of<'a>(&'a self, customer: &'a CustomerId) -> impl Iterator<Item = &'a Account> {
        self.accounts.values().filter(move |a| a.is_owned_by(customer))
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn entry(&self, entry_id: u64) -> Option<&LedgerEntry> {
        entry_id
            .checked_sub(1)
            .and_then(|i| self.entries.get(i as usize))
    }

    pub fn next_entry_id(&self) -> u64 {
        self.entries.len() as u64 + 1
    }

    pub fn open_account(&mut self, account: Account) -> Result<()> {
        if self.accounts.contains_key(&account.account_id) {
            return Err(BankError::InvalidEntry(format!(
                "account {} already exists",
                account.account_id
            )));
        }
        self.sums.insert(account.account_id.clone(), 0);
        self.accounts.insert(account.account_id.clone(), account);
        Ok(())
    }

    /// Ensures the clearing account for `currency` exists.
    pub fn ensure_clearing(&mut self, currency: Currency, at: Timestamp) -> AccountId {
        let id = AccountId::clearing(currency);
        if !self.accounts.contains_key(&id) {
            self.open_account(Account {
                account_id: id.clone(),
                customer_id: None,
                kind: AccountKind::Clearing,
                status: AccountStatus::Active,
                opened_at: at,
                currency,
                credit_limit: Money::zero(currency),
            })
            .expect("clearing account absent");
        }
        id
    }

    pub fn close_account(&mut self, id: &AccountId) -> Result<()> {
        let account = self
            .accounts
            .get_mut(id)
            .ok_or_else(|| BankError::UnknownAccount(id.to_string()))?;
        account.status = AccountStatus::Closed;
        Ok(())
    }

    /// Raw sum of all postings to the account.
    pub fn posting_sum(&self, id: &AccountId) -> Result<i64> {
        self.sums
            .get(id)
            .copied()
            .ok_or_else(|| BankError::UnknownAccount(id.to_string()))
    }

    /// Customer-facing balance. Deposit accounts report funds held; credit
    /// cards report the amount owed.
    pub fn balance(&self, id: &AccountId) -> Result<Money> {
        let account = self.account(id)?;
        let sum = self.posting_sum(id)?;
        let amount = match account.kind {
            AccountKind::CreditCard => -sum,
            _ => sum,
        };
        Ok(Money::new(amount, account.currency))
    }

    /// Validates a draft and turns it into an entry with the given id, without
    /// mutating the ledger.
    pub fn prepare(
        &self,
        draft: &EntryDraft,
        entry_id: u64,
        posted_at: Timestamp,
    ) -> Result<LedgerEntry> {
        if draft.legs.len() < 2 {
            return Err(BankError::Unbalanced);
        }
        if draft.legs.iter().any(|(_, m)| m.is_zero()) {
            return Err(BankError::InvalidEntry("zero-amount posting".into()));
        }

        let mut per_currency: BTreeMap<Currency, i64> = BTreeMap::new();
        for (_, amount) in &draft.legs {
            let slot = per_currency.entry(amount.currency).or_default();
            *slot = slot
                .checked_add(amount.amount_minor)
                .ok_or(BankError::AmountOverflow)?;
        }
        if per_currency.values().any(|&s| s != 0) {
            return Err(BankError::Unbalanced);
        }

        let mut deltas: BTreeMap<&AccountId, i64> = BTreeMap::new();
        for (id, amount) in &draft.legs {
            let account = self.account(id)?;
            if account.status == AccountStatus::Closed {
                return Err(BankError::AccountClosed(id.to_string()));
            }
            if account.currency != amount.currency {
                return Err(BankError::CurrencyMismatch {
                    left: account.currency.to_string(),
                    right: amount.currency.to_string(),
                });
            }
            let slot = deltas.entry(id).or_default();
            *slot = slot
                .checked_add(amount.amount_minor)
                .ok_or(BankError::AmountOverflow)?;
        }

        for (id, delta) in deltas {
            let account = &self.accounts[id];
            let after = self.sums[id]
                .checked_add(delta)
                .ok_or(BankError::AmountOverflow)?;
            match account.kind {
                AccountKind::Current | AccountKind::Saving if after < 0 => {
                    return Err(BankError::InsufficientFunds(id.to_string()));
                }
                AccountKind::CreditCard => {
                    let owed = -after;
                    if owed < 0 || owed > account.credit_limit.amount_minor {
                        return Err(BankError::OverLimit(id.to_string()));
                    }
                }
                _ => {}
            }
        }

        let postings = draft
            .legs
            .iter()
            .enumerate()
            .map(|(i, (account_id, amount))| Posting {
                entry_id,
                account_id: account_id.clone(),
                amount: *amount,
                ordinal: i as u32,
            })
            .collect();
        Ok(LedgerEntry {
            entry_id,
            posted_at,
            kind: draft.kind,
            description: draft.description.clone(),
            postings,
        })
    }

    /// Records an entry produced by [`Ledger::prepare`]. All postings apply together.
    pub fn commit(&mut self, entry: LedgerEntry) -> Result<()> {
        if entry.entry_id != self.next_entry_id() {
            return Err(BankError::InvalidEntry(format!(
                "entry id {} out of order, expected {}",
                entry.entry_id,
                self.next_entry_id()
            )));
        }
        for p in &entry.postings {
            if !self.sums.contains_key(&p.account_id) {
                return Err(BankError::UnknownAccount(p.account_id.to_string()));
            }
        }
        let pos = self.entries.len();
        let mut touched = BTreeSet::new();
        for p in &entry.postings {
            *self.sums.get_mut(&p.account_id).expect("checked above") += p.amount.amount_minor;
            touched.insert(p.account_id.clone());
        }
        for id in touched {
            self.by_account.entry(id).or_default().push(pos);
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Entries touching `account` in the customer-visible window, newest first.
    pub fn history(
        &self,
        account: &AccountId,
        from: NaiveDate,
        to: NaiveDate,
        now: Timestamp,
    ) -> Result<Vec<HistoryItem>> {
        let currency = self.account(account)?.currency;
        let Some((lo, hi)) = retention_window(from, to, now)? else {
            return Ok(Vec::new());
        };
        let positions = self.by_account.get(account).map(Vec::as_slice).unwrap_or(&[]);
        Ok(positions
            .iter()
            .rev()
            .map(|&i| &self.entries[i])
            .filter(|e| e.posted_at >= lo && e.posted_at <= hi)
            .map(|e| HistoryItem {
                entry_id: e.entry_id,
                posted_at: e.posted_at,
                kind: e.kind,
                description: e.description.clone(),
                amount: Money::new(e.net_for(account), currency),
            })
            .collect())
    }

    /// History covering the whole retention window.
    pub fn recent_history(&self, account: &AccountId, now: Timestamp) -> Result<Vec<HistoryItem>> {
        let from = now.minus_days(RETENTION_DAYS).date();
        self.history(account, from, now.date(), now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(days: i64) -> Timestamp {
        Timestamp(1_700_000_000_000 + days * 86_400_000)
    }

    fn open(ledger: &mut Ledger, id: &str, kind: AccountKind, limit: i64) -> AccountId {
        let account_id = AccountId::new(id);
        ledger
            .open_account(Account {
                account_id: account_id.clone(),
                customer_id: Some(CustomerId("C1".into())),
                kind,
                status: AccountStatus::Active,
                opened_at: ts(0),
                currency: Currency::MYR,
                credit_limit: Money::myr(limit),
            })
            .unwrap();
        account_id
    }

    fn post(ledger: &mut Ledger, draft: EntryDraft, at: Timestamp) -> Result<u64> {
        let entry = ledger.prepare(&draft, ledger.next_entry_id(), at)?;
        let id = entry.entry_id;
        ledger.commit(entry)?;
        Ok(id)
    }

    fn fund(ledger: &mut Ledger, id: &AccountId, amount: i64) {
        let clearing = ledger.ensure_clearing(Currency::MYR, ts(0));
        let draft =
            EntryDraft::between(EntryKind::Deposit, "fund", clearing, id.clone(), Money::myr(amount))
                .unwrap();
        post(ledger, draft, ts(0)).unwrap();
    }

    #[test]
    fn simple_transfer_moves_exact_amount() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Current, 0);
        let b = open(&mut l, "B", AccountKind::Saving, 0);
        fund(&mut l, &a, 25_000);
        let draft =
            EntryDraft::between(EntryKind::Transfer, "t", a.clone(), b.clone(), Money::myr(10_000))
                .unwrap();
        post(&mut l, draft, ts(1)).unwrap();
        assert_eq!(l.balance(&a).unwrap(), Money::myr(15_000));
        assert_eq!(l.balance(&b).unwrap(), Money::myr(10_000));
    }

    #[test]
    fn unbalanced_entry_rejected() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Current, 0);
        let b = open(&mut l, "B", AccountKind::Current, 0);
        fund(&mut l, &a, 25_000);
        let draft = EntryDraft::new(EntryKind::Transfer, "t")
            .leg(a, Money::myr(-10_000))
            .leg(b, Money::myr(9_999));
        assert_eq!(post(&mut l, draft, ts(1)).unwrap_err(), BankError::Unbalanced);
    }

    #[test]
    fn single_leg_and_zero_leg_rejected() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Current, 0);
        let b = open(&mut l, "B", AccountKind::Current, 0);
        let one = EntryDraft::new(EntryKind::Adjustment, "x").leg(a.clone(), Money::myr(1));
        assert_eq!(post(&mut l, one, ts(0)).unwrap_err().code(), "UNBALANCED");
        let zero = EntryDraft::new(EntryKind::Adjustment, "x")
            .leg(a, Money::myr(0))
            .leg(b, Money::myr(0));
        assert_eq!(post(&mut l, zero, ts(0)).unwrap_err().code(), "INVALID_ENTRY");
    }

    #[test]
    fn overdraft_rejected_and_nothing_applied() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Current, 0);
        let b = open(&mut l, "B", AccountKind::Current, 0);
        fund(&mut l, &a, 100);
        let draft =
            EntryDraft::between(EntryKind::Transfer, "t", a.clone(), b.clone(), Money::myr(101))
                .unwrap();
        assert_eq!(post(&mut l, draft, ts(1)).unwrap_err().code(), "INSUFFICIENT_FUNDS");
        assert_eq!(l.balance(&a).unwrap().amount_minor, 100);
        assert_eq!(l.balance(&b).unwrap().amount_minor, 0);
        assert_eq!(l.entries().len(), 1);
    }

    #[test]
    fn credit_card_limit_and_overpayment() {
        let mut l = Ledger::new();
        let cur = open(&mut l, "CUR", AccountKind::Current, 0);
        let card = open(&mut l, "CARD", AccountKind::CreditCard, 1_000);
        let clearing = l.ensure_clearing(Currency::MYR, ts(0));
        fund(&mut l, &cur, 5_000);

        let spend = |amt| {
            EntryDraft::between(EntryKind::Adjustment, "spend", card.clone(), clearing.clone(), Money::myr(amt))
                .unwrap()
        };
        assert_eq!(post(&mut l, spend(1_001), ts(1)).unwrap_err().code(), "OVER_LIMIT");
        post(&mut l, spend(600), ts(1)).unwrap();
        assert_eq!(l.balance(&card).unwrap().amount_minor, 600);

        let pay = |amt| {
            EntryDraft::between(EntryKind::BillPayment, "pay", cur.clone(), card.clone(), Money::myr(amt))
                .unwrap()
        };
        assert_eq!(post(&mut l, pay(601), ts(2)).unwrap_err().code(), "OVER_LIMIT");
        post(&mut l, pay(600), ts(2)).unwrap();
        assert_eq!(l.balance(&card).unwrap().amount_minor, 0);
    }

    #[test]
    fn closed_account_rejects_postings() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Current, 0);
        let b = open(&mut l, "B", AccountKind::Current, 0);
        fund(&mut l, &a, 100);
        l.close_account(&b).unwrap();
        let draft =
            EntryDraft::between(EntryKind::Transfer, "t", a, b, Money::myr(1)).unwrap();
        assert_eq!(post(&mut l, draft, ts(1)).unwrap_err().code(), "ACCOUNT_CLOSED");
    }

    #[test]
    fn currency_must_match_account() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Current, 0);
        let b = open(&mut l, "B", AccountKind::Current, 0);
        let usd = Currency::new("USD").unwrap();
        let draft = EntryDraft::new(EntryKind::Transfer, "t")
            .leg(a, Money::new(-1, usd))
            .leg(b, Money::new(1, usd));
        assert_eq!(post(&mut l, draft, ts(1)).unwrap_err().code(), "CURRENCY_MISMATCH");
    }

    #[test]
    fn fresh_account_balance_is_zero_and_unknown_errors() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Saving, 0);
        assert_eq!(l.balance(&a).unwrap(), Money::myr(0));
        assert_eq!(
            l.balance(&AccountId::new("nope")).unwrap_err().code(),
            "UNKNOWN_ACCOUNT"
        );
    }

    #[test]
    fn plus_500_minus_200() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Saving, 0);
        let clearing = l.ensure_clearing(Currency::MYR, ts(0));
        post(&mut l, EntryDraft::between(EntryKind::Deposit, "in", clearing.clone(), a.clone(), Money::myr(500)).unwrap(), ts(0)).unwrap();
        post(&mut l, EntryDraft::between(EntryKind::Adjustment, "out", a.clone(), clearing, Money::myr(200)).unwrap(), ts(0)).unwrap();
        assert_eq!(l.balance(&a).unwrap().amount_minor, 300);
    }

    #[test]
    fn history_clamps_to_ninety_days() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Saving, 0);
        let clearing = l.ensure_clearing(Currency::MYR, ts(0));
        let now = ts(200);
        for days_ago in [100, 89, 10] {
            let d = EntryDraft::between(EntryKind::Deposit, format!("d{days_ago}"), clearing.clone(), a.clone(), Money::myr(1)).unwrap();
            post(&mut l, d, now.minus_days(days_ago)).unwrap();
        }
        let items = l
            .history(&a, now.minus_days(120).date(), now.date(), now)
            .unwrap();
        let descs: Vec<_> = items.iter().map(|i| i.description.as_str()).collect();
        assert_eq!(descs, ["d10", "d89"]);
    }

    #[test]
    fn history_empty_day_and_bad_range() {
        let mut l = Ledger::new();
        let a = open(&mut l, "A", AccountKind::Saving, 0);
        let now = ts(5);
        assert!(l.history(&a, now.date(), now.date(), now).unwrap().is_empty());
        let err = l
            .history(&a, now.date(), now.minus_days(1).date(), now)
            .unwrap_err();
        assert_eq!(err, BankError::InvalidRange);
        assert_eq!(
            l.history(&AccountId::new("x"), now.date(), now.date(), now).unwrap_err().code(),
            "UNKNOWN_ACCOUNT"
        );
    }
}
