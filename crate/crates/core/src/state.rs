//! The durable state of the bank and the events that change it.
//!
//! Every state mutation is expressed as an [`Event`]. Events are journaled
//! before they are applied, and applying the same event sequence to an empty
//! [`BankState`] always yields the same state.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cheques::{ChequeBookRequest, ChequeBookStatus, ChequeRegister, ChequeStatus};
use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::identity::{Credential, Customer, CustomerStatus, PasswordDigest, ProfileUpdate};
use crate::ledger::{Account, AccountId, CustomerId, Ledger, LedgerEntry};
use crate::payments::{
    BeneficiaryUpdate, Beneficiary, BillPayment, BillerRegistration, InstructionKind,
    InstructionStatus, PaymentBook, RegistrationStatus, TransferInstruction,
};
use crate::statements::StatementRequest;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Presentment {
    Paid { entry: LedgerEntry },
    Returned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    CredentialCreated {
        credential: Credential,
    },
    CustomerAdded {
        customer: Customer,
        credential: Credential,
        accounts: Vec<Account>,
    },
    CustomerCancelled {
        customer_id: CustomerId,
        at: Timestamp,
    },
    AccountOpened {
        account: Account,
    },
    LoginFailed {
        username: String,
        failed_attempts: u32,
        locked: bool,
    },
    LoginSucceeded {
        username: String,
    },
    CredentialReinitialized {
        username: String,
    },
    PasswordChanged {
        username: String,
        password: PasswordDigest,
        at: Timestamp,
    },
    ProfileUpdated {
        customer_id: CustomerId,
        update: ProfileUpdate,
    },
    AtmCancelled {
        customer_id: CustomerId,
    },
    EntryPosted {
        entry: LedgerEntry,
    },
    StatementRequested {
        request: StatementRequest,
    },
    BeneficiarySaved {
        beneficiary: Beneficiary,
    },
    BeneficiaryUpdated {
        beneficiary_id: u64,
        update: BeneficiaryUpdate,
    },
    BeneficiaryDeleted {
        beneficiary_id: u64,
    },
    TransferCreated {
        transfer: TransferInstruction,
        entry: Option<LedgerEntry>,
    },
    TransferCancelled {
        transfer_id: u64,
        at: Timestamp,
    },
    BillerRegistered {
        registration: BillerRegistration,
    },
    BillersDeregistered {
        registration_ids: Vec<u64>,
    },
    BillPaymentCreated {
        payment: BillPayment,
        entry: Option<LedgerEntry>,
    },
    BillPaymentCancelled {
        payment_id: u64,
        at: Timestamp,
    },
    InstructionExecuted {
        kind: InstructionKind,
        instruction_id: u64,
        entry: LedgerEntry,
        at: Timestamp,
    },
    InstructionFailed {
        kind: InstructionKind,
        instruction_id: u64,
        reason: String,
        at: Timestamp,
    },
    ValueDateClosed {
        date: NaiveDate,
    },
    ChequeBookRequested {
        request: ChequeBookRequest,
    },
    ChequeBookDispatched {
        request_id: u64,
        first_cheque_no: u64,
        at: Timestamp,
    },
    ChequeStopped {
        cheque_no: String,
        at: Timestamp,
    },
    ChequePresented {
        cheque_no: String,
        result: Presentment,
        at: Timestamp,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::CredentialCreated { .. } => "credential_created",
            Event::CustomerAdded { .. } => "customer_added",
            Event::CustomerCancelled { .. } => "customer_cancelled",
            Event::AccountOpened { .. } => "account_opened",
            Event::LoginFailed { .. } => "login_failed",
            Event::LoginSucceeded { .. } => "login_succeeded",
            Event::CredentialReinitialized { .. } => "credential_reinitialized",
            Event::PasswordChanged { .. } => "password_changed",
            Event::ProfileUpdated { .. } => "profile_updated",
            Event::AtmCancelled { .. } => "atm_cancelled",
            Event::EntryPosted { .. } => "entry_posted",
            Event::StatementRequested { .. } => "statement_requested",
            Event::BeneficiarySaved { .. } => "beneficiary_saved",
            Event::BeneficiaryUpdated { .. } => "beneficiary_updated",
            Event::BeneficiaryDeleted { .. } => "beneficiary_deleted",
            Event::TransferCreated { .. } => "transfer_created",
            Event::TransferCancelled { .. } => "transfer_cancelled",
            Event::BillerRegistered { .. } => "biller_registered",
            Event::BillersDeregistered { .. } => "billers_deregistered",
            Event::BillPaymentCreated { .. } => "bill_payment_created",
            Event::BillPaymentCancelled { .. } => "bill_payment_cancelled",
            Event::InstructionExecuted { .. } => "instruction_executed",
            Event::InstructionFailed { .. } => "instruction_failed",
            Event::ValueDateClosed { .. } => "value_date_closed",
            Event::ChequeBookRequested { .. } => "cheque_book_requested",
            Event::ChequeBookDispatched { .. } => "cheque_book_dispatched",
            Event::ChequeStopped { .. } => "cheque_stopped",
            Event::ChequePresented { .. } => "cheque_presented",
        }
    }

    /// Canonical payload bytes: compact JSON, fixed field order, no newlines.
    pub fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("events always serialize")
    }

    pub fn decode(bytes: &[u8]) -> Result<Event> {
        serde_json::from_slice(bytes).map_err(|e| BankError::CorruptJournal(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankState {
    pub customers: BTreeMap<CustomerId, Customer>,
    /// Keyed by username.
    pub credentials: BTreeMap<String, Credential>,
    pub ledger: Ledger,
    pub statements: BTreeMap<u64, StatementRequest>,
    pub payments: PaymentBook,
    pub cheques: ChequeRegister,
    pub last_customer_no: u64,
    pub last_account_no: u64,
    pub last_statement_id: u64,
}

fn corrupt(msg: impl Into<String>) -> BankError {
    BankError::CorruptJournal(msg.into())
}

impl BankState {
    pub fn new() -> Self {
        BankState::default()
    }

    pub fn customer(&self, id: &CustomerId) -> Result<&Customer> {
        self.customers
            .get(id)
            .ok_or_else(|| BankError::UnknownCustomer(id.to_string()))
    }

    pub fn credential_of(&self, customer: &CustomerId) -> Option<&Credential> {
        self.credentials
            .values()
            .find(|c| c.principal == crate::identity::Principal::Customer(customer.clone()))
    }

    fn open_account(&mut self, account: Account) -> Result<()> {
        self.ledger.ensure_clearing(account.currency, account.opened_at);
        if let Some(n) = account
            .account_id
            .as_str()
            .strip_prefix("ACC-")
            .and_then(|n| n.parse::<u64>().ok())
        {
            self.last_account_no = self.last_account_no.max(n);
        }
        self.ledger.open_account(account)
    }

    fn credential_mut(&mut self, username: &str) -> Result<&mut Credential> {
        self.credentials
            .get_mut(username)
            .ok_or_else(|| corrupt(format!("unknown username {username}")))
    }

    fn transfer_mut(&mut self, id: u64) -> Result<&mut TransferInstruction> {
        self.payments
            .transfers
            .get_mut(&id)
            .ok_or_else(|| corrupt(format!("unknown transfer {id}")))
    }

    fn payment_mut(&mut self, id: u64) -> Result<&mut BillPayment> {
        self.payments
            .bill_payments
            .get_mut(&id)
            .ok_or_else(|| corrupt(format!("unknown payment {id}")))
    }

    fn finish_instruction(
        &mut self,
        kind: InstructionKind,
        id: u64,
        status: InstructionStatus,
        entry_id: Option<u64>,
        reason: Option<String>,
        at: Timestamp,
    ) -> Result<()> {
        let (current, slot_entry, slot_reason, slot_finished, slot_status) = match kind {
            InstructionKind::Transfer => {
                let t = self.transfer_mut(id)?;
                (t.status, &mut t.executed_entry_id, &mut t.failure_reason, &mut t.finished_at, &mut t.status)
            }
            InstructionKind::BillPayment => {
                let p = self.payment_mut(id)?;
                (p.status, &mut p.executed_entry_id, &mut p.failure_reason, &mut p.finished_at, &mut p.status)
            }
        };
        if current != InstructionStatus::Pending {
            return Err(corrupt(format!("instruction {id} is not pending")));
        }
        *slot_status = status;
        *slot_entry = entry_id;
        *slot_reason = reason;
        *slot_finished = Some(at);
        Ok(())
    }

    /// Applies one journaled event. Errors mean the event stream is inconsistent.
    pub fn apply(&mut self, event: &Event) -> Result<()> {
        match event {
            Event::CredentialCreated { credential } => {
                if self.credentials.contains_key(&credential.username) {
                    return Err(corrupt("duplicate username"));
                }
                self.credentials
                    .insert(credential.username.clone(), credential.clone());
            }
            Event::CustomerAdded {
                customer,
                credential,
                accounts,
            } => {
                if self.credentials.contains_key(&credential.username)
                    || self.customers.contains_key(&customer.customer_id)
                {
                    return Err(corrupt("duplicate customer"));
                }
                if let Some(n) = customer
                    .customer_id
                    .0
                    .strip_prefix("CUS-")
                    .and_then(|n| n.parse::<u64>().ok())
                {
                    self.last_customer_no = self.last_customer_no.max(n);
                }
                self.customers
                    .insert(customer.customer_id.clone(), customer.clone());
                self.credentials
                    .insert(credential.username.clone(), credential.clone());
                for account in accounts {
                    self.open_account(account.clone())?;
                }
            }
            Event::CustomerCancelled { customer_id, .. } => {
                let customer = self
                    .customers
                    .get_mut(customer_id)
                    .ok_or_else(|| corrupt("unknown customer"))?;
                customer.status = CustomerStatus::Cancelled;
                let owned: Vec<AccountId> = self
                    .ledger
                    .accounts_of(customer_id)
                    .map(|a| a.account_id.clone())
                    .collect();
                for id in owned {
                    self.ledger.close_account(&id)?;
                }
            }
            Event::AccountOpened { account } => self.open_account(account.clone())?,
            Event::LoginFailed {
                username,
                failed_attempts,
                locked,
            } => {
                let cred = self.credential_mut(username)?;
                cred.failed_attempts = *failed_attempts;
                cred.locked = *locked;
            }
            Event::LoginSucceeded { username } => {
                self.credential_mut(username)?.failed_attempts = 0;
            }
            Event::CredentialReinitialized { username } => {
                let cred = self.credential_mut(username)?;
                cred.failed_attempts = 0;
                cred.locked = false;
            }
            Event::PasswordChanged {
                username,
                password,
                at,
            } => {
                let cred = self.credential_mut(username)?;
                cred.password = password.clone();
                cred.password_set_at = *at;
                cred.must_change = false;
            }
            Event::ProfileUpdated {
                customer_id,
                update,
            } => {
                let customer = self
                    .customers
                    .get_mut(customer_id)
                    .ok_or_else(|| corrupt("unknown customer"))?;
                update.apply_to(customer);
            }
            Event::AtmCancelled { customer_id } => {
                self.customers
                    .get_mut(customer_id)
                    .ok_or_else(|| corrupt("unknown customer"))?
                    .atm_enabled = false;
            }
            Event::EntryPosted { entry } => self.ledger.commit(entry.clone())?,
            Event::StatementRequested { request } => {
                self.last_statement_id = self.last_statement_id.max(request.request_id);
                self.statements.insert(request.request_id, request.clone());
            }
            Event::BeneficiarySaved { beneficiary } => {
                let book = &mut self.payments;
                book.last_beneficiary_id = book.last_beneficiary_id.max(beneficiary.beneficiary_id);
                book.beneficiaries
                    .insert(beneficiary.beneficiary_id, beneficiary.clone());
            }
            Event::BeneficiaryUpdated {
                beneficiary_id,
                update,
            } => {
                let b = self
                    .payments
                    .beneficiaries
                    .get_mut(beneficiary_id)
                    .ok_or_else(|| corrupt("unknown beneficiary"))?;
                if let Some(no) = &update.account_no {
                    b.account_no = no.clone();
                }
                if let Some(nick) = &update.nickname {
                    b.nickname = nick.clone();
                }
            }
            Event::BeneficiaryDeleted { beneficiary_id } => {
                self.payments
                    .beneficiaries
                    .remove(beneficiary_id)
                    .ok_or_else(|| corrupt("unknown beneficiary"))?;
            }
            Event::TransferCreated { transfer, entry } => {
                if let Some(entry) = entry {
                    self.ledger.commit(entry.clone())?;
                }
                let book = &mut self.payments;
                book.last_instruction_id = book.last_instruction_id.max(transfer.transfer_id);
                book.transfers.insert(transfer.transfer_id, transfer.clone());
            }
            Event::TransferCancelled { transfer_id, at } => self.finish_instruction(
                InstructionKind::Transfer,
                *transfer_id,
                InstructionStatus::Cancelled,
                None,
                None,
                *at,
            )?,
            Event::BillerRegistered { registration } => {
                let book = &mut self.payments;
                book.last_registration_id =
                    book.last_registration_id.max(registration.registration_id);
                book.registrations
                    .insert(registration.registration_id, registration.clone());
            }
            Event::BillersDeregistered { registration_ids } => {
                for id in registration_ids {
                    self.payments
                        .registrations
                        .get_mut(id)
                        .ok_or_else(|| corrupt("unknown registration"))?
                        .status = RegistrationStatus::Removed;
                }
            }
            Event::BillPaymentCreated { payment, entry } => {
                if let Some(entry) = entry {
                    self.ledger.commit(entry.clone())?;
                }
                let book = &mut self.payments;
                book.last_instruction_id = book.last_instruction_id.max(payment.payment_id);
                book.bill_payments.insert(payment.payment_id, payment.clone());
            }
            Event::BillPaymentCancelled { payment_id, at } => self.finish_instruction(
                InstructionKind::BillPayment,
                *payment_id,
                InstructionStatus::Cancelled,
                None,
                None,
                *at,
            )?,
            Event::InstructionExecuted {
                kind,
                instruction_id,
                entry,
                at,
            } => {
                self.finish_instruction(
                    *kind,
                    *instruction_id,
                    InstructionStatus::Executed,
                    Some(entry.entry_id),
                    None,
                    *at,
                )?;
                self.ledger.commit(entry.clone())?;
            }
            Event::InstructionFailed {
                kind,
                instruction_id,
                reason,
                at,
            } => self.finish_instruction(
                *kind,
                *instruction_id,
                InstructionStatus::Failed,
                None,
                Some(reason.clone()),
                *at,
            )?,
            Event::ValueDateClosed { date } => {
                self.payments.last_processed_date = Some(*date);
            }
            Event::ChequeBookRequested { request } => {
                let reg = &mut self.cheques;
                reg.last_request_id = reg.last_request_id.max(request.request_id);
                reg.book_requests.insert(request.request_id, request.clone());
            }
            Event::ChequeBookDispatched {
                request_id,
                first_cheque_no,
                at,
            } => {
                let reg = &mut self.cheques;
                let req = reg
                    .book_requests
                    .get_mut(request_id)
                    .ok_or_else(|| corrupt("unknown cheque book request"))?;
                req.status = ChequeBookStatus::Dispatched;
                req.first_cheque_no = Some(first_cheque_no.to_string());
                let (account, leaves) = (req.account_id.clone(), req.leaves);
                reg.issue_range(&account, *first_cheque_no, leaves, *at);
            }
            Event::ChequeStopped { cheque_no, at } => {
                let cheque = self
                    .cheques
                    .cheques
                    .get_mut(cheque_no)
                    .ok_or_else(|| corrupt("unknown cheque"))?;
                cheque.status = ChequeStatus::Stopped;
                cheque.status_changed_at = *at;
            }
            Event::ChequePresented {
                cheque_no,
                result,
                at,
            } => {
                if let Presentment::Paid { entry } = result {
                    self.ledger.commit(entry.clone())?;
                }
                let cheque = self
                    .cheques
                    .cheques
                    .get_mut(cheque_no)
                    .ok_or_else(|| corrupt("unknown cheque"))?;
                match result {
                    Presentment::Paid { entry } => {
                        cheque.status = ChequeStatus::Paid;
                        cheque.paid_entry_id = Some(entry.entry_id);
                    }
                    Presentment::Returned => cheque.status = ChequeStatus::Returned,
                }
                cheque.status_changed_at = *at;
            }
        }
        Ok(())
    }

    /// Replays `events` onto an empty state.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a Event>) -> Result<BankState> {
        let mut state = BankState::new();
        for event in events {
            state.apply(event)?;
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::Principal;
    use crate::ledger::{AccountKind, AccountStatus};
    use crate::money::{Currency, Money};

    fn digest() -> PasswordDigest {
        PasswordDigest {
            algorithm: "pbkdf2-sha256".into(),
            iterations: 1,
            salt: "00".into(),
            digest: "00".into(),
        }
    }

    #[test]
    fn encoding_is_single_line_and_stable() {
        let e = Event::CustomerCancelled {
            customer_id: CustomerId("CUS-000001".into()),
            at: Timestamp(5),
        };
        let bytes = e.encode();
        assert!(!bytes.contains(&b'\n'));
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            r#"{"type":"customer_cancelled","customer_id":"CUS-000001","at":5}"#
        );
        assert_eq!(Event::decode(&bytes).unwrap(), e);
    }

    #[test]
    fn cancelling_a_customer_closes_accounts() {
        let cid = CustomerId("CUS-000001".into());
        let account = Account {
            account_id: AccountId::new("ACC-000001"),
            customer_id: Some(cid.clone()),
            kind: AccountKind::Current,
            status: AccountStatus::Active,
            opened_at: Timestamp(0),
            currency: Currency::MYR,
            credit_limit: Money::myr(0),
        };
        let events = vec![
            Event::CustomerAdded {
                customer: Customer {
                    customer_id: cid.clone(),
                    full_name: "A".into(),
                    ic_passport_no: "1".into(),
                    email: String::new(),
                    postal_address: String::new(),
                    phone: String::new(),
                    secure_delivery_contact: String::new(),
                    atm_enabled: true,
                    status: CustomerStatus::Active,
                },
                credential: Credential {
                    username: "a".into(),
                    principal: Principal::Customer(cid.clone()),
                    password: digest(),
                    password_set_at: Timestamp(0),
                    failed_attempts: 0,
                    locked: false,
                    must_change: true,
                },
                accounts: vec![account],
            },
            Event::CustomerCancelled {
                customer_id: cid.clone(),
                at: Timestamp(1),
            },
        ];
        let state = BankState::replay(&events).unwrap();
        assert_eq!(state.last_customer_no, 1);
        assert_eq!(state.last_account_no, 1);
        let acct = state.ledger.account(&AccountId::new("ACC-000001")).unwrap();
        assert_eq!(acct.status, AccountStatus::Closed);
        assert!(state.ledger.account(&AccountId::clearing(Currency::MYR)).is_ok());
        assert!(state.credential_of(&cid).is_some());
    }

    #[test]
    fn inconsistent_stream_is_rejected() {
        let mut state = BankState::new();
        let err = state
            .apply(&Event::LoginSucceeded {
                username: "ghost".into(),
            })
            .unwrap_err();
        assert_eq!(err.code(), "CORRUPT_JOURNAL");
    }
}
