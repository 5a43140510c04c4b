//! The banking service: every customer, admin and batch operation.
//!
//! Mutations follow one path: validate against the current state, append the
//! resulting [`Event`] to the journal, then apply it. All of that happens
//! under a single write lock, so journal order is the order of effect.

use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;
use parking_lot::{RwLock, RwLockWriteGuard};
use serde::{Deserialize, Serialize};

use crate::backup::{self, OffsiteReport};
use crate::cheques::{check_leaves, ChequeBookRequest, ChequeBookStatus, ChequeStatus};
use crate::clock::{Clock, SystemClock, Timestamp};
use crate::error::{BankError, Result};
use crate::identity::{
    default_digesters, hash_password, verify_password, Credential, CredentialDigester, Customer,
    CustomerStatus, DigestSettings, PasswordPolicy, Principal, ProfileUpdate, Session,
    SessionStatus, SessionTable,
};
use crate::journal::{FileSink, Journal, JournalSink, MemorySink};
use crate::ledger::{
    Account, AccountId, AccountKind, AccountStatus, CustomerId, EntryDraft, EntryKind,
    HistoryItem, LedgerEntry, retention_window,
};
use crate::money::{Currency, Money};
use crate::payments::{
    default_notifiers, BeneficiaryUpdate, Beneficiary, BillPayment, BillerRegistration,
    ExecutedItem, ExecutionReport, FailedItem, InstructionKind, InstructionStatus, Notifier,
    RegistrationStatus, TacStore, TransferInstruction, TransferTarget, MAX_BENEFICIARIES,
};
use crate::registry::Registry;
use crate::snapshot::{DataDir, RecoveryReport, SnapshotMeta, SnapshotMode};
use crate::state::{BankState, Event, Presentment};
use crate::statements::{
    default_channels, Delivery, StatementChannel, StatementDelivery, StatementRequest,
    StatementStatus,
};

pub const WELCOME_MESSAGE: &str =
    "welcome to the internet banking system please click on the left menu bar to choose your option!";
pub const LOGOUT_MESSAGE: &str = "You have been logged out successfully";
pub const PASSWORD_EXPIRED_MESSAGE: &str =
    "Your password has expired. Please change your password before continuing.";
pub const ACCOUNTS_MESSAGE: &str =
    "Please click on the respective account/card types for more details.";
pub const CONFIRM_MESSAGE: &str = "Confirm";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankConfig {
    pub idle_timeout_s: i64,
    pub tac_ttl_s: i64,
    pub policy: PasswordPolicy,
    pub digest: DigestSettings,
    /// Name of the registered notifier used for transfer e-mails.
    pub notifier: String,
}

impl Default for BankConfig {
    fn default() -> Self {
        BankConfig {
            idle_timeout_s: 300,
            tac_ttl_s: 300,
            policy: PasswordPolicy::default(),
            digest: DigestSettings::default(),
            notifier: "log".into(),
        }
    }
}

impl BankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.idle_timeout_s <= 0 || self.tac_ttl_s <= 0 || self.digest.iterations == 0 {
            return Err(BankError::InvalidConfig(
                "idle_timeout_s, tac_ttl_s and digest iterations must be positive".into(),
            ));
        }
        if self.policy.min_length == 0 {
            return Err(BankError::InvalidConfig("min_length must be positive".into()));
        }
        self.policy.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginOutcome {
    pub token: String,
    pub message: String,
    pub must_change: bool,
    pub is_admin: bool,
    pub customer_id: Option<CustomerId>,
    pub full_name: Option<String>,
    pub session: SessionStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountView {
    pub account_id: AccountId,
    pub kind: AccountKind,
    pub status: AccountStatus,
    pub currency: Currency,
    /// Funds held, or for credit cards the amount owed.
    pub balance: Money,
    pub credit_limit: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountsOverview {
    pub message: String,
    pub accounts: Vec<AccountView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementOutcome {
    pub request: StatementRequest,
    /// Rendered statement for channels that deliver immediately.
    pub body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentConfirmation {
    pub message: String,
    pub payment: BillPayment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChequeView {
    pub account_id: AccountId,
    pub cheque_no: String,
    pub status: ChequeStatus,
    pub status_changed_at: Timestamp,
    pub paid_entry_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub uptime_s: i64,
    pub journal_seq: u64,
}

impl Health {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRef {
    Own(AccountId),
    Beneficiary(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferRequest {
    pub source_account: AccountId,
    pub target: TargetRef,
    pub amount: Money,
    pub effective_date: NaiveDate,
    pub tac: String,
    #[serde(default)]
    pub notify_email: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisteredPaymentRequest {
    pub registration_id: u64,
    /// Defaults to the customer's first current (else saving) account.
    #[serde(default)]
    pub payer_account: Option<AccountId>,
    pub amount: Money,
    #[serde(default)]
    pub bill_ref: Option<String>,
    pub effective_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenPaymentRequest {
    pub corporation: String,
    pub bill_account_no: String,
    pub holder_name: String,
    #[serde(default)]
    pub payer_account: Option<AccountId>,
    pub amount: Money,
    #[serde(default)]
    pub bill_ref: Option<String>,
    pub effective_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewAccount {
    pub kind: AccountKind,
    #[serde(default)]
    pub currency: Option<Currency>,
    /// Credit cards only.
    #[serde(default)]
    pub credit_limit_minor: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewCustomer {
    pub full_name: String,
    pub ic_passport_no: String,
    #[serde(default)]
    pub email: String,
    #[serde(default)]
    pub postal_address: String,
    #[serde(default)]
    pub phone: String,
    #[serde(default)]
    pub secure_delivery_contact: String,
    #[serde(default)]
    pub accounts: Vec<NewAccount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomerCreated {
    pub customer_id: CustomerId,
    pub accounts: Vec<AccountId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionsPage {
    pub total: usize,
    pub offset: usize,
    pub entries: Vec<LedgerEntry>,
}

struct Core {
    state: BankState,
    journal: Journal,
}

pub struct BankBuilder {
    config: BankConfig,
    clock: Arc<dyn Clock>,
    digesters: Registry<dyn CredentialDigester>,
    channels: Registry<dyn StatementDelivery>,
    notifiers: Registry<dyn Notifier>,
}

impl BankBuilder {
    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn digester(mut self, digester: Arc<dyn CredentialDigester>) -> Self {
        self.digesters.register(digester);
        self
    }

    pub fn statement_channel(mut self, channel: Arc<dyn StatementDelivery>) -> Self {
        self.channels.register(channel);
        self
    }

    pub fn notifier(mut self, notifier: Arc<dyn Notifier>) -> Self {
        self.notifiers.register(notifier);
        self
    }

    fn build(self, state: BankState, journal: Journal, data_dir: Option<DataDir>) -> Result<Bank> {
        self.config.validate()?;
        // fail early on a misnamed digester
        self.digesters.get(&self.config.digest.algorithm)?;
        let notifier = self.notifiers.get(&self.config.notifier)?;
        let started_at = self.clock.now();
        Ok(Bank {
            core: RwLock::new(Core { state, journal }),
            sessions: SessionTable::new(),
            tacs: TacStore::new(),
            clock: self.clock,
            config: self.config,
            digesters: self.digesters,
            channels: self.channels,
            notifier,
            data_dir,
            started_at,
        })
    }

    /// A bank journaling into memory; the returned sink exposes the bytes.
    pub fn in_memory(self) -> Result<(Bank, MemorySink)> {
        let (journal, sink) = Journal::in_memory();
        Ok((self.build(BankState::new(), journal, None)?, sink))
    }

    /// Empty bank journaling to an arbitrary sink.
    pub fn with_sink(self, sink: Box<dyn JournalSink>) -> Result<Bank> {
        self.build(BankState::new(), Journal::new(sink, 0, 0), None)
    }

    /// Recovers from `dir` and continues appending to its journal.
    pub fn open(self, dir: impl AsRef<Path>) -> Result<(Bank, RecoveryReport)> {
        self.open_with(dir, |sink| Box::new(sink))
    }

    /// Like [`BankBuilder::open`], letting the caller wrap the journal file sink.
    pub fn open_with(
        self,
        dir: impl AsRef<Path>,
        wrap: impl FnOnce(FileSink) -> Box<dyn JournalSink>,
    ) -> Result<(Bank, RecoveryReport)> {
        let data = DataDir::new(dir.as_ref());
        data.create()?;
        let recovered = data.recover()?;
        let sink = FileSink::open(&data.journal_path(), recovered.journal_valid_len)
            .map_err(BankError::storage)?;
        let journal = Journal::new(wrap(sink), recovered.last_seq, recovered.journal_valid_len);
        let bank = self.build(recovered.state, journal, Some(data))?;
        Ok((bank, recovered.report))
    }
}

pub struct Bank {
    core: RwLock<Core>,
    sessions: SessionTable,
    tacs: TacStore,
    clock: Arc<dyn Clock>,
    config: BankConfig,
    digesters: Registry<dyn CredentialDigester>,
    channels: Registry<dyn StatementDelivery>,
    notifier: Arc<dyn Notifier>,
    data_dir: Option<DataDir>,
    started_at: Timestamp,
}

fn non_empty(field: &str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        Err(BankError::MissingField(field.to_string()))
    } else {
        Ok(())
    }
}

/// Ledger rejections that leave a recorded, failed instruction behind.
fn is_execution_failure(err: &BankError) -> bool {
    matches!(
        err,
        BankError::InsufficientFunds(_) | BankError::OverLimit(_) | BankError::AccountClosed(_)
    )
}

impl Bank {
    pub fn builder(config: BankConfig) -> BankBuilder {
        BankBuilder {
            config,
            clock: Arc::new(SystemClock),
            digesters: default_digesters(),
            channels: default_channels(),
            notifiers: default_notifiers(),
        }
    }

    pub fn config(&self) -> &BankConfig {
        &self.config
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn today(&self) -> NaiveDate {
        self.clock.today()
    }

    pub fn data_dir(&self) -> Option<&DataDir> {
        self.data_dir.as_ref()
    }

    /// A copy of the full durable state.
    pub fn state(&self) -> BankState {
        self.core.read().state.clone()
    }

    /// Runs `f` against the current state under the read lock.
    pub fn with_state<R>(&self, f: impl FnOnce(&BankState) -> R) -> R {
        f(&self.core.read().state)
    }

    pub fn journal_seq(&self) -> u64 {
        self.core.read().journal.last_seq()
    }

    pub fn health(&self) -> Health {
        let core = self.core.read();
        Health {
            status: if core.journal.is_healthy() { "ok" } else { "unavailable" }.into(),
            uptime_s: self.now().secs_since(self.started_at),
            journal_seq: core.journal.last_seq(),
        }
    }

    fn commit(&self, core: &mut Core, event: Event) -> Result<u64> {
        let seq = core.journal.append(&event, self.now())?;
        if let Err(e) = core.state.apply(&event) {
            // validated before journaling, so this is a bug rather than bad input
            tracing::error!(error = %e, seq, kind = event.kind(), "journaled event failed to apply");
            return Err(e);
        }
        Ok(seq)
    }

    fn write(&self) -> RwLockWriteGuard<'_, Core> {
        self.core.write()
    }

    // ---- sessions & authorization -------------------------------------

    /// Validates a bearer token and records activity on it.
    pub fn authorize(&self, token: &str) -> Result<Session> {
        self.sessions.touch(token, self.now())
    }

    fn customer_session(&self, token: &str) -> Result<(Session, CustomerId)> {
        let session = self.authorize(token)?;
        let customer = session.customer_id().cloned().ok_or(BankError::NotCustomer)?;
        if session.must_change {
            return Err(BankError::PasswordChangeRequired);
        }
        Ok((session, customer))
    }

    fn admin_session(&self, token: &str) -> Result<Session> {
        let session = self.authorize(token)?;
        if session.principal != Principal::Admin {
            return Err(BankError::NotAdmin);
        }
        Ok(session)
    }

    /// Remaining idle time for a live session, without counting as activity.
    pub fn heartbeat(&self, token: &str) -> Result<SessionStatus> {
        let now = self.now();
        Ok(self.sessions.peek(token, now)?.status(now))
    }

    pub fn session_status(&self, token: &str) -> Option<SessionStatus> {
        let now = self.now();
        self.sessions.peek(token, now).ok().map(|s| s.status(now))
    }

    pub fn acknowledge_continue(&self, token: &str) -> Result<SessionStatus> {
        let now = self.now();
        Ok(self.sessions.touch(token, now)?.status(now))
    }

    /// Drops idle sessions; meant to be called periodically.
    pub fn sweep_sessions(&self) -> usize {
        self.sessions.sweep(self.now())
    }

    pub fn login(&self, username: &str, password: &str) -> Result<LoginOutcome> {
        let stored = self
            .core
            .read()
            .state
            .credentials
            .get(username)
            .cloned()
            .ok_or(BankError::InvalidCredentials)?;
        if stored.locked {
            return Err(BankError::Locked);
        }
        // slow digest outside the lock; counters are re-read below
        let matches = verify_password(&self.digesters, &stored.password, password)?;

        let mut core = self.write();
        let cred = core
            .state
            .credentials
            .get(username)
            .cloned()
            .ok_or(BankError::InvalidCredentials)?;
        if cred.locked {
            return Err(BankError::Locked);
        }
        if !matches || cred.password != stored.password {
            let failed_attempts = cred.failed_attempts + 1;
            let locked = failed_attempts >= self.config.policy.max_failed_attempts;
            self.commit(
                &mut core,
                Event::LoginFailed {
                    username: username.to_string(),
                    failed_attempts,
                    locked,
                },
            )?;
            if locked {
                tracing::warn!(%username, "credential locked after failed log-on attempts");
            }
            return Err(BankError::InvalidCredentials);
        }
        let mut full_name = None;
        if let Principal::Customer(id) = &cred.principal {
            let customer = core.state.customer(id)?;
            if customer.status == CustomerStatus::Cancelled {
                return Err(BankError::CustomerCancelled);
            }
            full_name = Some(customer.full_name.clone());
        }
        if cred.failed_attempts > 0 {
            self.commit(
                &mut core,
                Event::LoginSucceeded {
                    username: username.to_string(),
                },
            )?;
        }
        drop(core);

        let now = self.now();
        let must_change = cred.must_change || cred.password_expired(&self.config.policy, now);
        let session = self.sessions.open(
            username,
            cred.principal.clone(),
            self.config.idle_timeout_s,
            must_change,
            now,
        );
        Ok(LoginOutcome {
            token: session.token.clone(),
            message: if must_change {
                PASSWORD_EXPIRED_MESSAGE.to_string()
            } else {
                WELCOME_MESSAGE.to_string()
            },
            must_change,
            is_admin: cred.is_admin(),
            customer_id: session.customer_id().cloned(),
            full_name,
            session: session.status(now),
        })
    }

    pub fn logout(&self, token: &str) -> Result<String> {
        self.sessions.end(token, self.now())?;
        self.tacs.revoke_session(token);
        Ok(LOGOUT_MESSAGE.to_string())
    }

    pub fn change_password(&self, token: &str, ic_passport_no: &str, new_password: &str) -> Result<()> {
        let session = self.authorize(token)?;
        let customer_id = session.customer_id().cloned().ok_or(BankError::NotCustomer)?;
        {
            let core = self.core.read();
            if core.state.customer(&customer_id)?.ic_passport_no != ic_passport_no {
                return Err(BankError::IcMismatch);
            }
        }
        self.config.policy.check(new_password)?;
        let password = hash_password(&self.digesters, &self.config.digest, new_password)?;
        let mut core = self.write();
        self.commit(
            &mut core,
            Event::PasswordChanged {
                username: session.username.clone(),
                password,
                at: self.now(),
            },
        )?;
        self.sessions.clear_must_change(token);
        Ok(())
    }

    pub fn profile(&self, token: &str) -> Result<Customer> {
        let (_, customer_id) = self.customer_session(token)?;
        Ok(self.core.read().state.customer(&customer_id)?.clone())
    }

    pub fn update_profile(&self, token: &str, update: ProfileUpdate) -> Result<Customer> {
        let (_, customer_id) = self.customer_session(token)?;
        let mut core = self.write();
        core.state.customer(&customer_id)?;
        self.commit(
            &mut core,
            Event::ProfileUpdated {
                customer_id: customer_id.clone(),
                update,
            },
        )?;
        Ok(core.state.customer(&customer_id)?.clone())
    }

    pub fn cancel_atm(&self, token: &str) -> Result<()> {
        let (_, customer_id) = self.customer_session(token)?;
        let mut core = self.write();
        if !core.state.customer(&customer_id)?.atm_enabled {
            return Err(BankError::AlreadyCancelled);
        }
        self.commit(&mut core, Event::AtmCancelled { customer_id })?;
        Ok(())
    }

    // ---- administration ----------------------------------------------

    /// Creates the administrator credential if it does not exist yet.
    pub fn bootstrap_admin(&self, username: &str, password: &str) -> Result<bool> {
        if self.core.read().state.credentials.contains_key(username) {
            return Ok(false);
        }
        let digest = hash_password(&self.digesters, &self.config.digest, password)?;
        let mut core = self.write();
        if core.state.credentials.contains_key(username) {
            return Ok(false);
        }
        let credential = Credential {
            username: username.to_string(),
            principal: Principal::Admin,
            password: digest,
            password_set_at: self.now(),
            failed_attempts: 0,
            locked: false,
            must_change: false,
        };
        self.commit(&mut core, Event::CredentialCreated { credential })?;
        Ok(true)
    }

    pub fn admin_reinitialize(&self, admin_token: &str, username: &str) -> Result<()> {
        self.admin_session(admin_token)?;
        let mut core = self.write();
        if !core.state.credentials.contains_key(username) {
            return Err(BankError::UnknownUser(username.to_string()));
        }
        self.commit(
            &mut core,
            Event::CredentialReinitialized {
                username: username.to_string(),
            },
        )?;
        Ok(())
    }

    pub fn admin_add_customer(
        &self,
        admin_token: &str,
        draft: NewCustomer,
        username: &str,
        initial_password: &str,
    ) -> Result<CustomerCreated> {
        self.admin_session(admin_token)?;
        self.add_customer(draft, username, initial_password, true)
    }

    /// Creates a customer with a credential and accounts. `must_change` forces a
    /// password change at first log-on.
    pub fn add_customer(
        &self,
        draft: NewCustomer,
        username: &str,
        password: &str,
        must_change: bool,
    ) -> Result<CustomerCreated> {
        non_empty("username", username)?;
        non_empty("full_name", &draft.full_name)?;
        non_empty("ic_passport_no", &draft.ic_passport_no)?;
        self.config.policy.check(password)?;
        for a in &draft.accounts {
            if a.kind == AccountKind::Clearing {
                return Err(BankError::InvalidField("kind".into()));
            }
            if a.credit_limit_minor < 0 {
                return Err(BankError::InvalidField("credit_limit_minor".into()));
            }
        }
        if self.core.read().state.credentials.contains_key(username) {
            return Err(BankError::DuplicateUsername(username.to_string()));
        }
        let digest = hash_password(&self.digesters, &self.config.digest, password)?;

        let mut core = self.write();
        if core.state.credentials.contains_key(username) {
            return Err(BankError::DuplicateUsername(username.to_string()));
        }
        let now = self.now();
        let customer_id = CustomerId(format!("CUS-{:06}", core.state.last_customer_no + 1));
        let mut next_account = core.state.last_account_no;
        let accounts: Vec<Account> = draft
            .accounts
            .iter()
            .map(|a| {
                next_account += 1;
                let currency = a.currency.unwrap_or_default();
                Account {
                    account_id: AccountId(format!("ACC-{next_account:06}")),
                    customer_id: Some(customer_id.clone()),
                    kind: a.kind,
                    status: AccountStatus::Active,
                    opened_at: now,
                    currency,
                    credit_limit: Money::new(
                        if a.kind == AccountKind::CreditCard { a.credit_limit_minor } else { 0 },
                        currency,
                    ),
                }
            })
            .collect();
        let account_ids = accounts.iter().map(|a| a.account_id.clone()).collect();
        let customer = Customer {
            customer_id: customer_id.clone(),
            full_name: draft.full_name,
            ic_passport_no: draft.ic_passport_no,
            email: draft.email,
            postal_address: draft.postal_address,
            phone: draft.phone,
            secure_delivery_contact: draft.secure_delivery_contact,
            atm_enabled: true,
            status: CustomerStatus::Active,
        };
        let credential = Credential {
            username: username.to_string(),
            principal: Principal::Customer(customer_id.clone()),
            password: digest,
            password_set_at: now,
            failed_attempts: 0,
            locked: false,
            must_change,
        };
        self.commit(
            &mut core,
            Event::CustomerAdded {
                customer,
                credential,
                accounts,
            },
        )?;
        Ok(CustomerCreated {
            customer_id,
            accounts: account_ids,
        })
    }

    pub fn admin_cancel_customer(&self, admin_token: &str, customer_id: &CustomerId) -> Result<()> {
        self.admin_session(admin_token)?;
        let mut core = self.write();
        let customer = core.state.customer(customer_id)?;
        if customer.status == CustomerStatus::Cancelled {
            return Ok(());
        }
        let username = core.state.credential_of(customer_id).map(|c| c.username.clone());
        self.commit(
            &mut core,
            Event::CustomerCancelled {
                customer_id: customer_id.clone(),
                at: self.now(),
            },
        )?;
        drop(core);
        if let Some(username) = username {
            for token in self.sessions.end_user(&username, self.now()) {
                self.tacs.revoke_session(&token);
            }
        }
        Ok(())
    }

    /// Global entry log, oldest first.
    pub fn admin_transactions(&self, admin_token: &str, offset: usize, limit: usize) -> Result<TransactionsPage> {
        self.admin_session(admin_token)?;
        let core = self.core.read();
        let entries = core.state.ledger.entries();
        Ok(TransactionsPage {
            total: entries.len(),
            offset,
            entries: entries.iter().skip(offset).take(limit).cloned().collect(),
        })
    }

    // ---- ledger ----------------------------------------------------------

    /// Posts a balanced entry directly. Used for deposits, fixtures and adjustments.
    pub fn post_entry(&self, draft: &EntryDraft) -> Result<u64> {
        let mut core = self.write();
        let entry = core
            .state
            .ledger
            .prepare(draft, core.state.ledger.next_entry_id(), self.now())?;
        let id = entry.entry_id;
        self.commit(&mut core, Event::EntryPosted { entry })?;
        Ok(id)
    }

    /// Credits `account` from the clearing account.
    pub fn deposit(&self, account: &AccountId, amount: Money, description: &str) -> Result<u64> {
        let clearing = AccountId::clearing(amount.currency);
        let draft = EntryDraft::between(EntryKind::Deposit, description, clearing, account.clone(), amount)?;
        self.post_entry(&draft)
    }

    pub fn balance(&self, account: &AccountId) -> Result<Money> {
        self.core.read().state.ledger.balance(account)
    }

    fn owned_account<'a>(state: &'a BankState, customer: &CustomerId, id: &AccountId) -> Result<&'a Account> {
        let account = state.ledger.account(id)?;
        if !account.is_owned_by(customer) {
            return Err(BankError::NotOwner(id.to_string()));
        }
        Ok(account)
    }

    pub fn accounts(&self, token: &str) -> Result<AccountsOverview> {
        let (_, customer) = self.customer_session(token)?;
        let core = self.core.read();
        let ledger = &core.state.ledger;
        let accounts = ledger
            .accounts_of(&customer)
            .map(|a| {
                Ok(AccountView {
                    account_id: a.account_id.clone(),
                    kind: a.kind,
                    status: a.status,
                    currency: a.currency,
                    balance: ledger.balance(&a.account_id)?,
                    credit_limit: a.credit_limit,
                })
            })
            .collect::<Result<_>>()?;
        Ok(AccountsOverview {
            message: ACCOUNTS_MESSAGE.to_string(),
            accounts,
        })
    }

    pub fn account_history(
        &self,
        token: &str,
        account: &AccountId,
        from: NaiveDate,
        to: NaiveDate,
    ) -> Result<Vec<HistoryItem>> {
        let (_, customer) = self.customer_session(token)?;
        let core = self.core.read();
        Self::owned_account(&core.state, &customer, account)?;
        core.state.ledger.history(account, from, to, self.now())
    }

    pub fn request_statement(&self, token: &str, account: &AccountId, channel: &str) -> Result<StatementOutcome> {
        let (_, customer) = self.customer_session(token)?;
        let mut core = self.write();
        Self::owned_account(&core.state, &customer, account)?;
        let channel: StatementChannel = channel.parse()?;
        let delivery = self
            .channels
            .get(channel.as_str())
            .map_err(|_| BankError::InvalidChannel(channel.as_str().to_string()))?;
        let now = self.now();
        let history = core.state.ledger.recent_history(account, now)?;
        let (status, body) = match delivery.deliver(account, &history) {
            Delivery::Fulfilled(body) => (StatementStatus::Fulfilled, Some(body)),
            Delivery::Queued => (StatementStatus::Queued, None),
        };
        let request = StatementRequest {
            request_id: core.state.last_statement_id + 1,
            account_id: account.clone(),
            channel,
            requested_at: now,
            status,
        };
        self.commit(&mut core, Event::StatementRequested { request: request.clone() })?;
        Ok(StatementOutcome { request, body })
    }

    // ---- beneficiaries ---------------------------------------------------

    pub fn save_beneficiary(&self, token: &str, account_no: &str, nickname: &str) -> Result<Beneficiary> {
        let (_, owner) = self.customer_session(token)?;
        non_empty("account_no", account_no)?;
        let mut core = self.write();
        let book = &core.state.payments;
        if book.beneficiaries_of(&owner).iter().any(|b| b.account_no == account_no) {
            return Err(BankError::DuplicateBeneficiary(account_no.to_string()));
        }
        if book.beneficiary_count(&owner) >= MAX_BENEFICIARIES {
            return Err(BankError::LimitExceeded);
        }
        let beneficiary = Beneficiary {
            beneficiary_id: book.last_beneficiary_id + 1,
            owner,
            account_no: account_no.to_string(),
            nickname: nickname.to_string(),
            created_at: self.now(),
        };
        self.commit(&mut core, Event::BeneficiarySaved { beneficiary: beneficiary.clone() })?;
        Ok(beneficiary)
    }

    pub fn update_beneficiary(&self, token: &str, beneficiary_id: u64, update: BeneficiaryUpdate) -> Result<Beneficiary> {
        let (_, owner) = self.customer_session(token)?;
        let mut core = self.write();
        core.state.payments.owned_beneficiary(&owner, beneficiary_id)?;
        if let Some(no) = &update.account_no {
            non_empty("account_no", no)?;
            let clash = core
                .state
                .payments
                .beneficiaries_of(&owner)
                .iter()
                .any(|b| b.beneficiary_id != beneficiary_id && &b.account_no == no);
            if clash {
                return Err(BankError::DuplicateBeneficiary(no.clone()));
            }
        }
        self.commit(&mut core, Event::BeneficiaryUpdated { beneficiary_id, update })?;
        Ok(core.state.payments.owned_beneficiary(&owner, beneficiary_id)?.clone())
    }

    pub fn delete_beneficiary(&self, token: &str, beneficiary_id: u64) -> Result<()> {
        let (_, owner) = self.customer_session(token)?;
        let mut core = self.write();
        core.state.payments.owned_beneficiary(&owner, beneficiary_id)?;
        self.commit(&mut core, Event::BeneficiaryDeleted { beneficiary_id })?;
        Ok(())
    }

    pub fn list_beneficiaries(&self, token: &str) -> Result<Vec<Beneficiary>> {
        let (_, owner) = self.customer_session(token)?;
        let core = self.core.read();
        Ok(core.state.payments.beneficiaries_of(&owner).into_iter().cloned().collect())
    }

    // ---- transfers -------------------------------------------------------

    pub fn issue_tac(&self, token: &str) -> Result<String> {
        let (session, _) = self.customer_session(token)?;
        Ok(self.tacs.issue(&session.token, self.config.tac_ttl_s, self.now()).code)
    }

    fn check_schedule(&self, amount: &Money, effective_date: NaiveDate) -> Result<()> {
        if !amount.is_positive() {
            return Err(BankError::NonPositiveAmount);
        }
        if effective_date < self.today() {
            return Err(BankError::PastDate);
        }
        Ok(())
    }

    pub fn create_transfer(&self, token: &str, req: TransferRequest) -> Result<TransferInstruction> {
        let (session, owner) = self.customer_session(token)?;
        self.check_schedule(&req.amount, req.effective_date)?;
        let now = self.now();
        let mut core = self.write();
        let state = &core.state;
        let source = Self::owned_account(state, &owner, &req.source_account)?;
        if source.currency != req.amount.currency {
            return Err(BankError::CurrencyMismatch {
                left: source.currency.to_string(),
                right: req.amount.currency.to_string(),
            });
        }
        let (target, credit_account) = match &req.target {
            TargetRef::Own(id) => {
                Self::owned_account(state, &owner, id)?;
                if id == &req.source_account {
                    return Err(BankError::SameAccount);
                }
                (TransferTarget::Own { account_id: id.clone() }, id.clone())
            }
            TargetRef::Beneficiary(bid) => {
                let b = state.payments.owned_beneficiary(&owner, *bid)?;
                if b.account_no == req.source_account.as_str() {
                    return Err(BankError::SameAccount);
                }
                let internal = AccountId::new(b.account_no.clone());
                let credit = match state.ledger.account(&internal) {
                    Ok(a) if a.kind != AccountKind::Clearing => internal,
                    _ => AccountId::clearing(source.currency),
                };
                (
                    TransferTarget::Beneficiary {
                        beneficiary_id: *bid,
                        account_no: b.account_no.clone(),
                    },
                    credit,
                )
            }
        };
        self.tacs.check(&session.token, &req.tac, now)?;

        let transfer_id = state.payments.last_instruction_id + 1;
        let mut transfer = TransferInstruction {
            transfer_id,
            owner,
            source_account: req.source_account.clone(),
            target,
            credit_account: credit_account.clone(),
            amount: req.amount,
            effective_date: req.effective_date,
            status: InstructionStatus::Pending,
            notify_email: req.notify_email.clone(),
            created_at: now,
            finished_at: None,
            executed_entry_id: None,
            failure_reason: None,
        };
        let mut entry = None;
        let mut failure = None;
        if req.effective_date == now.date() {
            let draft = EntryDraft::between(
                EntryKind::Transfer,
                format!("Transfer #{transfer_id} to {credit_account}"),
                req.source_account.clone(),
                credit_account,
                req.amount,
            )?;
            match state.ledger.prepare(&draft, state.ledger.next_entry_id(), now) {
                Ok(e) => {
                    transfer.status = InstructionStatus::Executed;
                    transfer.executed_entry_id = Some(e.entry_id);
                    transfer.finished_at = Some(now);
                    entry = Some(e);
                }
                Err(e) if is_execution_failure(&e) => {
                    transfer.status = InstructionStatus::Failed;
                    transfer.failure_reason = Some(e.code().to_string());
                    transfer.finished_at = Some(now);
                    failure = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        self.tacs.consume(&session.token, &req.tac, now)?;
        self.commit(
            &mut core,
            Event::TransferCreated {
                transfer: transfer.clone(),
                entry,
            },
        )?;
        drop(core);
        if let Some(e) = failure {
            return Err(e);
        }
        if transfer.status == InstructionStatus::Executed {
            self.notify_transfer(&transfer);
        }
        Ok(transfer)
    }

    fn notify_transfer(&self, t: &TransferInstruction) {
        if let Some(email) = &t.notify_email {
            self.notifier.notify(
                email,
                "Funds transfer",
                &format!("Transfer #{} of {} has been {:?}", t.transfer_id, t.amount, t.status),
            );
        }
    }

    pub fn pending_transfers(&self, token: &str) -> Result<Vec<TransferInstruction>> {
        let (_, owner) = self.customer_session(token)?;
        let core = self.core.read();
        Ok(core.state.payments.pending_transfers(&owner).into_iter().cloned().collect())
    }

    pub fn cancel_pending_transfer(&self, token: &str, transfer_id: u64) -> Result<()> {
        let (_, owner) = self.customer_session(token)?;
        let mut core = self.write();
        let t = core
            .state
            .payments
            .transfers
            .get(&transfer_id)
            .filter(|t| t.owner == owner)
            .ok_or(BankError::UnknownTransfer(transfer_id))?;
        if t.status != InstructionStatus::Pending {
            return Err(BankError::NotPending);
        }
        self.commit(&mut core, Event::TransferCancelled { transfer_id, at: self.now() })?;
        Ok(())
    }

    /// Finished (executed, failed or cancelled) transfers in the visible window, newest first.
    pub fn transfer_history(&self, token: &str, from: NaiveDate, to: NaiveDate) -> Result<Vec<TransferInstruction>> {
        let (_, owner) = self.customer_session(token)?;
        let Some((lo, hi)) = retention_window(from, to, self.now())? else {
            return Ok(Vec::new());
        };
        let core = self.core.read();
        let mut list: Vec<_> = core
            .state
            .payments
            .transfers
            .values()
            .filter(|t| t.owner == owner)
            .filter(|t| t.finished_at.is_some_and(|at| at >= lo && at <= hi))
            .cloned()
            .collect();
        list.sort_by(|a, b| b.finished_at.cmp(&a.finished_at).then(b.transfer_id.cmp(&a.transfer_id)));
        Ok(list)
    }

    // ---- bill payments ---------------------------------------------------

    fn default_payer(state: &BankState, owner: &CustomerId) -> Result<AccountId> {
        let accounts: Vec<&Account> = state
            .ledger
            .accounts_of(owner)
            .filter(|a| a.status == AccountStatus::Active)
            .collect();
        [AccountKind::Current, AccountKind::Saving]
            .iter()
            .find_map(|kind| accounts.iter().find(|a| a.kind == *kind))
            .map(|a| a.account_id.clone())
            .ok_or_else(|| BankError::MissingField("payer_account".into()))
    }

    #[allow(clippy::too_many_arguments)]
    fn create_bill_payment(
        &self,
        owner: CustomerId,
        payer_account: Option<AccountId>,
        corporation: String,
        bill_account_no: String,
        holder_name: String,
        amount: Money,
        bill_ref: Option<String>,
        effective_date: NaiveDate,
        registration_id: Option<u64>,
    ) -> Result<PaymentConfirmation> {
        self.check_schedule(&amount, effective_date)?;
        non_empty("corporation", &corporation)?;
        non_empty("bill_account_no", &bill_account_no)?;
        let now = self.now();
        let mut core = self.write();
        let state = &core.state;
        if let Some(id) = registration_id {
            state.payments.owned_active_registration(&owner, id)?;
        }
        let payer = match payer_account {
            Some(a) => a,
            None => Self::default_payer(state, &owner)?,
        };
        let payer_currency = Self::owned_account(state, &owner, &payer)?.currency;
        // paying one's own card settles the card balance instead of leaving the bank
        let own_card = AccountId::new(bill_account_no.clone());
        let credit_account = match state.ledger.account(&own_card) {
            Ok(a) if a.kind == AccountKind::CreditCard && a.is_owned_by(&owner) => own_card,
            _ => AccountId::clearing(payer_currency),
        };
        let payment_id = state.payments.last_instruction_id + 1;
        let mut payment = BillPayment {
            payment_id,
            owner,
            payer_account: payer.clone(),
            credit_account: credit_account.clone(),
            corporation,
            bill_account_no,
            holder_name,
            amount,
            bill_ref,
            effective_date,
            registration_id,
            status: InstructionStatus::Pending,
            created_at: now,
            finished_at: None,
            executed_entry_id: None,
            failure_reason: None,
        };
        let mut entry = None;
        let mut failure = None;
        if effective_date == now.date() {
            let draft = EntryDraft::between(
                EntryKind::BillPayment,
                format!("Bill payment #{payment_id} to {}", payment.corporation),
                payer,
                credit_account,
                amount,
            )?;
            match state.ledger.prepare(&draft, state.ledger.next_entry_id(), now) {
                Ok(e) => {
                    payment.status = InstructionStatus::Executed;
                    payment.executed_entry_id = Some(e.entry_id);
                    payment.finished_at = Some(now);
                    entry = Some(e);
                }
                Err(e) if is_execution_failure(&e) => {
                    payment.status = InstructionStatus::Failed;
                    payment.failure_reason = Some(e.code().to_string());
                    payment.finished_at = Some(now);
                    failure = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        self.commit(
            &mut core,
            Event::BillPaymentCreated {
                payment: payment.clone(),
                entry,
            },
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(PaymentConfirmation {
            message: CONFIRM_MESSAGE.to_string(),
            payment,
        })
    }

    pub fn pay_registered(&self, token: &str, req: RegisteredPaymentRequest) -> Result<PaymentConfirmation> {
        let (_, owner) = self.customer_session(token)?;
        let reg = self
            .core
            .read()
            .state
            .payments
            .owned_active_registration(&owner, req.registration_id)?
            .clone();
        self.create_bill_payment(
            owner,
            req.payer_account,
            reg.corporation,
            reg.bill_account_no,
            reg.holder_name,
            req.amount,
            req.bill_ref,
            req.effective_date,
            Some(reg.registration_id),
        )
    }

    pub fn open_payment(&self, token: &str, req: OpenPaymentRequest) -> Result<PaymentConfirmation> {
        let (_, owner) = self.customer_session(token)?;
        self.create_bill_payment(
            owner,
            req.payer_account,
            req.corporation,
            req.bill_account_no,
            req.holder_name,
            req.amount,
            req.bill_ref,
            req.effective_date,
            None,
        )
    }

    pub fn register_biller(
        &self,
        token: &str,
        corporation: &str,
        bill_account_no: &str,
        holder_name: &str,
    ) -> Result<BillerRegistration> {
        let (_, owner) = self.customer_session(token)?;
        non_empty("corporation", corporation)?;
        non_empty("bill_account_no", bill_account_no)?;
        non_empty("holder_name", holder_name)?;
        let mut core = self.write();
        let book = &core.state.payments;
        let duplicate = book
            .active_registrations(&owner)
            .iter()
            .any(|r| r.corporation == corporation && r.bill_account_no == bill_account_no);
        if duplicate {
            return Err(BankError::DuplicateRegistration);
        }
        let registration = BillerRegistration {
            registration_id: book.last_registration_id + 1,
            owner,
            corporation: corporation.to_string(),
            bill_account_no: bill_account_no.to_string(),
            holder_name: holder_name.to_string(),
            status: RegistrationStatus::Active,
            registered_at: self.now(),
        };
        self.commit(&mut core, Event::BillerRegistered { registration: registration.clone() })?;
        Ok(registration)
    }

    pub fn list_registrations(&self, token: &str) -> Result<Vec<BillerRegistration>> {
        let (_, owner) = self.customer_session(token)?;
        let core = self.core.read();
        Ok(core.state.payments.active_registrations(&owner).into_iter().cloned().collect())
    }

    /// Removes every listed registration, or none if any id is not an active one of the caller.
    pub fn deregister_billers(&self, token: &str, registration_ids: &[u64]) -> Result<()> {
        let (_, owner) = self.customer_session(token)?;
        let mut core = self.write();
        let mut ids = registration_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        for id in &ids {
            core.state.payments.owned_active_registration(&owner, *id)?;
        }
        if ids.is_empty() {
            return Err(BankError::MissingField("registration_ids".into()));
        }
        self.commit(&mut core, Event::BillersDeregistered { registration_ids: ids })?;
        Ok(())
    }

    pub fn enquire_future_payments(&self, token: &str) -> Result<Vec<BillPayment>> {
        let (_, owner) = self.customer_session(token)?;
        let core = self.core.read();
        Ok(core.state.payments.pending_payments(&owner).into_iter().cloned().collect())
    }

    pub fn cancel_future_payment(&self, token: &str, payment_id: u64) -> Result<()> {
        let (_, owner) = self.customer_session(token)?;
        let mut core = self.write();
        let p = core
            .state
            .payments
            .bill_payments
            .get(&payment_id)
            .filter(|p| p.owner == owner)
            .ok_or(BankError::UnknownPayment(payment_id))?;
        if p.status != InstructionStatus::Pending {
            return Err(BankError::NotPending);
        }
        self.commit(&mut core, Event::BillPaymentCancelled { payment_id, at: self.now() })?;
        Ok(())
    }

    pub fn bill_payment_history(&self, token: &str, from: NaiveDate, to: NaiveDate) -> Result<Vec<BillPayment>> {
        let (_, owner) = self.customer_session(token)?;
        let Some((lo, hi)) = retention_window(from, to, self.now())? else {
            return Ok(Vec::new());
        };
        let core = self.core.read();
        let mut list: Vec<_> = core
            .state
            .payments
            .bill_payments
            .values()
            .filter(|p| p.owner == owner)
            .filter(|p| p.finished_at.is_some_and(|at| at >= lo && at <= hi))
            .cloned()
            .collect();
        list.sort_by(|a, b| b.finished_at.cmp(&a.finished_at).then(b.payment_id.cmp(&a.payment_id)));
        Ok(list)
    }

    pub fn top_ten_payees(&self) -> Vec<String> {
        self.core.read().state.payments.top_payees()
    }

    // ---- value-date processing -----------------------------------------

    pub fn admin_run_value_date(&self, admin_token: &str, business_date: NaiveDate) -> Result<ExecutionReport> {
        self.admin_session(admin_token)?;
        self.run_value_date(business_date)
    }

    /// Executes every pending instruction due on or before `business_date`,
    /// in (effective date, id) order.
    pub fn run_value_date(&self, business_date: NaiveDate) -> Result<ExecutionReport> {
        let mut core = self.write();
        if let Some(last) = core.state.payments.last_processed_date {
            if business_date < last {
                return Err(BankError::DateRegression {
                    requested: business_date.to_string(),
                    last: last.to_string(),
                });
            }
        }
        let mut report = ExecutionReport {
            business_date: Some(business_date),
            ..ExecutionReport::default()
        };
        let mut notices = Vec::new();
        for due in core.state.payments.due(business_date) {
            let now = self.now();
            let state = &core.state;
            let (source, credit, amount, description, email) = match due.kind {
                InstructionKind::Transfer => {
                    let t = &state.payments.transfers[&due.instruction_id];
                    (
                        t.source_account.clone(),
                        t.credit_account.clone(),
                        t.amount,
                        format!("Transfer #{} to {}", t.transfer_id, t.credit_account),
                        t.notify_email.clone(),
                    )
                }
                InstructionKind::BillPayment => {
                    let p = &state.payments.bill_payments[&due.instruction_id];
                    (
                        p.payer_account.clone(),
                        p.credit_account.clone(),
                        p.amount,
                        format!("Bill payment #{} to {}", p.payment_id, p.corporation),
                        None,
                    )
                }
            };
            let kind = match due.kind {
                InstructionKind::Transfer => EntryKind::Transfer,
                InstructionKind::BillPayment => EntryKind::BillPayment,
            };
            let prepared = EntryDraft::between(kind, description, source, credit, amount)
                .and_then(|d| state.ledger.prepare(&d, state.ledger.next_entry_id(), now));
            match prepared {
                Ok(entry) => {
                    report.executed_items.push(ExecutedItem {
                        instruction_id: due.instruction_id,
                        kind: due.kind,
                        entry_id: entry.entry_id,
                        notify_email: email.clone(),
                    });
                    self.commit(
                        &mut core,
                        Event::InstructionExecuted {
                            kind: due.kind,
                            instruction_id: due.instruction_id,
                            entry,
                            at: now,
                        },
                    )?;
                }
                Err(e) => {
                    let reason = e.code().to_string();
                    report.failed_items.push(FailedItem {
                        instruction_id: due.instruction_id,
                        kind: due.kind,
                        reason: reason.clone(),
                        notify_email: email.clone(),
                    });
                    self.commit(
                        &mut core,
                        Event::InstructionFailed {
                            kind: due.kind,
                            instruction_id: due.instruction_id,
                            reason,
                            at: now,
                        },
                    )?;
                }
            }
            if due.kind == InstructionKind::Transfer && email.is_some() {
                notices.push(core.state.payments.transfers[&due.instruction_id].clone());
            }
        }
        if core.state.payments.last_processed_date.is_none_or(|last| business_date > last) {
            self.commit(&mut core, Event::ValueDateClosed { date: business_date })?;
        }
        drop(core);
        for t in &notices {
            self.notify_transfer(t);
        }
        report.executed = report.executed_items.len();
        report.failed = report.failed_items.len();
        Ok(report)
    }

    // ---- cheques -----------------------------------------------------------

    pub fn cheque_status(&self, token: &str, account: &AccountId, cheque_no: &str) -> Result<ChequeView> {
        let (_, owner) = self.customer_session(token)?;
        let core = self.core.read();
        Self::owned_account(&core.state, &owner, account)?;
        let c = core.state.cheques.cheque_on(account, cheque_no)?;
        Ok(ChequeView {
            account_id: c.account_id.clone(),
            cheque_no: c.cheque_no.clone(),
            status: c.status,
            status_changed_at: c.status_changed_at,
            paid_entry_id: c.paid_entry_id,
        })
    }

    /// Account a cheque number was issued on.
    pub fn cheque_account(&self, cheque_no: &str) -> Result<AccountId> {
        self.core
            .read()
            .state
            .cheques
            .cheques
            .get(cheque_no)
            .map(|c| c.account_id.clone())
            .ok_or_else(|| BankError::UnknownCheque(cheque_no.to_string()))
    }

    /// The caller's cheque with this number. Other customers' cheques look unknown.
    fn own_cheque_account(&self, token: &str, cheque_no: &str) -> Result<AccountId> {
        let (_, owner) = self.customer_session(token)?;
        let account = self.cheque_account(cheque_no)?;
        let core = self.core.read();
        match Self::owned_account(&core.state, &owner, &account) {
            Ok(_) => Ok(account),
            Err(_) => Err(BankError::UnknownCheque(cheque_no.to_string())),
        }
    }

    pub fn cheque_by_number(&self, token: &str, cheque_no: &str) -> Result<ChequeView> {
        let account = self.own_cheque_account(token, cheque_no)?;
        self.cheque_status(token, &account, cheque_no)
    }

    pub fn stop_cheque_by_number(&self, token: &str, cheque_no: &str) -> Result<ChequeView> {
        let account = self.own_cheque_account(token, cheque_no)?;
        self.stop_cheque(token, &account, cheque_no)
    }

    pub fn stop_cheque(&self, token: &str, account: &AccountId, cheque_no: &str) -> Result<ChequeView> {
        let (_, owner) = self.customer_session(token)?;
        let mut core = self.write();
        Self::owned_account(&core.state, &owner, account)?;
        core.state
            .cheques
            .cheque_on(account, cheque_no)?
            .check_transition(ChequeStatus::Stopped)?;
        self.commit(
            &mut core,
            Event::ChequeStopped {
                cheque_no: cheque_no.to_string(),
                at: self.now(),
            },
        )?;
        drop(core);
        self.cheque_status(token, account, cheque_no)
    }

    pub fn request_cheque_book(&self, token: &str, account: &AccountId, leaves: u32) -> Result<ChequeBookRequest> {
        let (_, owner) = self.customer_session(token)?;
        let mut core = self.write();
        let acct = Self::owned_account(&core.state, &owner, account)?;
        if acct.kind != AccountKind::Current {
            return Err(BankError::NotCurrentAccount);
        }
        if acct.status == AccountStatus::Closed {
            return Err(BankError::AccountClosed(account.to_string()));
        }
        check_leaves(leaves)?;
        let request = ChequeBookRequest {
            request_id: core.state.cheques.last_request_id + 1,
            account_id: account.clone(),
            leaves,
            requested_at: self.now(),
            status: ChequeBookStatus::Queued,
            first_cheque_no: None,
        };
        self.commit(&mut core, Event::ChequeBookRequested { request: request.clone() })?;
        Ok(request)
    }

    pub fn admin_dispatch_cheque_book(&self, admin_token: &str, request_id: u64) -> Result<ChequeBookRequest> {
        self.admin_session(admin_token)?;
        self.dispatch_cheque_book(request_id)
    }

    /// Marks a book dispatched and registers its numbered leaves as unpaid cheques.
    pub fn dispatch_cheque_book(&self, request_id: u64) -> Result<ChequeBookRequest> {
        let mut core = self.write();
        let req = core
            .state
            .cheques
            .book_requests
            .get(&request_id)
            .ok_or(BankError::UnknownChequeBook(request_id))?;
        if req.status == ChequeBookStatus::Dispatched {
            return Ok(req.clone());
        }
        let first_cheque_no = core.state.cheques.next_number();
        self.commit(
            &mut core,
            Event::ChequeBookDispatched {
                request_id,
                first_cheque_no,
                at: self.now(),
            },
        )?;
        Ok(core.state.cheques.book_requests[&request_id].clone())
    }

    pub fn admin_present_cheque(
        &self,
        admin_token: &str,
        account: &AccountId,
        cheque_no: &str,
        amount: Money,
    ) -> Result<ChequeView> {
        self.admin_session(admin_token)?;
        self.present_cheque(account, cheque_no, amount)
    }

    /// Simulates a cheque being presented for payment.
    pub fn present_cheque(&self, account: &AccountId, cheque_no: &str, amount: Money) -> Result<ChequeView> {
        if !amount.is_positive() {
            return Err(BankError::NonPositiveAmount);
        }
        let now = self.now();
        let mut core = self.write();
        let state = &core.state;
        let cheque = state.cheques.cheque_on(account, cheque_no)?;
        cheque.check_transition(ChequeStatus::Paid)?;
        let currency = state.ledger.account(account)?.currency;
        let draft = EntryDraft::between(
            EntryKind::Cheque,
            format!("Cheque {cheque_no}"),
            account.clone(),
            AccountId::clearing(currency),
            amount,
        )?;
        let result = match state.ledger.prepare(&draft, state.ledger.next_entry_id(), now) {
            Ok(entry) => Presentment::Paid { entry },
            Err(BankError::InsufficientFunds(_) | BankError::AccountClosed(_)) => Presentment::Returned,
            Err(e) => return Err(e),
        };
        self.commit(
            &mut core,
            Event::ChequePresented {
                cheque_no: cheque_no.to_string(),
                result,
                at: now,
            },
        )?;
        let c = core.state.cheques.cheque_on(account, cheque_no)?;
        Ok(ChequeView {
            account_id: c.account_id.clone(),
            cheque_no: c.cheque_no.clone(),
            status: c.status,
            status_changed_at: c.status_changed_at,
            paid_entry_id: c.paid_entry_id,
        })
    }

    // ---- backups ---------------------------------------------------------

    fn require_data_dir(&self) -> Result<&DataDir> {
        self.data_dir
            .as_ref()
            .ok_or_else(|| BankError::StorageFailure("bank has no data directory".into()))
    }

    /// Captures a snapshot while holding off writers.
    pub fn snapshot(&self, mode: SnapshotMode) -> Result<SnapshotMeta> {
        let data = self.require_data_dir()?;
        let core = self.core.read();
        data.write_snapshot(mode, &core.state, core.journal.last_seq(), self.now())
    }

    pub fn offsite_copy(&self, target: &Path) -> Result<OffsiteReport> {
        let data = self.require_data_dir()?;
        let _writers_held = self.core.read();
        backup::offsite_copy(data, target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;

    fn test_config() -> BankConfig {
        BankConfig {
            digest: DigestSettings {
                algorithm: "pbkdf2-sha256".into(),
                iterations: 1,
            },
            ..BankConfig::default()
        }
    }

    fn bank() -> (Bank, ManualClock) {
        let clock = ManualClock::starting_on(NaiveDate::from_ymd_opt(2025, 3, 3).unwrap());
        let (bank, _) = Bank::builder(test_config())
            .clock(Arc::new(clock.clone()))
            .in_memory()
            .unwrap();
        (bank, clock)
    }

    #[test]
    fn unknown_notifier_or_digester_fails_build() {
        let mut cfg = test_config();
        cfg.notifier = "pigeon".into();
        assert_eq!(Bank::builder(cfg).in_memory().err().unwrap().code(), "UNKNOWN_STRATEGY");
        let mut cfg = test_config();
        cfg.digest.algorithm = "rot13".into();
        assert_eq!(Bank::builder(cfg).in_memory().err().unwrap().code(), "UNKNOWN_STRATEGY");
    }

    #[test]
    fn config_validation() {
        let mut cfg = test_config();
        cfg.idle_timeout_s = 0;
        assert_eq!(cfg.validate().unwrap_err().code(), "INVALID_CONFIG");
        let mut cfg = test_config();
        cfg.policy.max_failed_attempts = 0;
        assert_eq!(cfg.validate().unwrap_err().code(), "INVALID_CONFIG");
    }

    #[test]
    fn admin_cannot_use_customer_routes() {
        let (bank, _) = bank();
        bank.bootstrap_admin("admin", "Adm1n!pass").unwrap();
        let admin = bank.login("admin", "Adm1n!pass").unwrap();
        assert!(admin.is_admin);
        assert_eq!(bank.accounts(&admin.token).unwrap_err(), BankError::NotCustomer);
        assert!(!bank.bootstrap_admin("admin", "other").unwrap());
    }

    #[test]
    fn login_counter_resets_only_when_needed() {
        let (bank, _) = bank();
        bank.add_customer(
            NewCustomer {
                full_name: "A".into(),
                ic_passport_no: "1".into(),
                email: String::new(),
                postal_address: String::new(),
                phone: String::new(),
                secure_delivery_contact: String::new(),
                accounts: vec![],
            },
            "a",
            "Str0ng!pass",
            false,
        )
        .unwrap();
        let seq = bank.journal_seq();
        bank.login("a", "Str0ng!pass").unwrap();
        assert_eq!(bank.journal_seq(), seq, "clean login journals nothing");
        assert!(bank.login("a", "wrong").is_err());
        bank.login("a", "Str0ng!pass").unwrap();
        assert_eq!(bank.journal_seq(), seq + 2);
        let cred = bank.state().credentials["a"].clone();
        assert_eq!(cred.failed_attempts, 0);
    }
}
