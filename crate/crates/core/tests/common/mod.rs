#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use bank_core::bank::{Bank, BankConfig, NewAccount, NewCustomer, TargetRef, TransferRequest};
use bank_core::identity::DigestSettings;
use bank_core::journal::MemorySink;
use bank_core::ledger::AccountKind;
use bank_core::snapshot::RecoveryReport;
use bank_core::{AccountId, Clock, ManualClock, Money};
use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::Rng;

pub const PASSWORD: &str = "Str0ng!pass";

pub fn config() -> BankConfig {
    BankConfig {
        digest: DigestSettings {
            algorithm: "pbkdf2-sha256".into(),
            iterations: 1,
        },
        notifier: "null".into(),
        // long enough that workloads spanning days keep their sessions
        idle_timeout_s: 400 * 86_400,
        ..BankConfig::default()
    }
}

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 1, 6).unwrap()
}

pub fn memory_bank() -> (Bank, ManualClock, MemorySink) {
    let clock = ManualClock::starting_on(start_date());
    let (bank, sink) = Bank::builder(config())
        .clock(Arc::new(clock.clone()))
        .in_memory()
        .unwrap();
    (bank, clock, sink)
}

pub fn disk_bank(dir: &Path, clock: &ManualClock) -> (Bank, RecoveryReport) {
    Bank::builder(config())
        .clock(Arc::new(clock.clone()))
        .open(dir)
        .unwrap()
}

pub struct Client {
    pub username: String,
    pub token: String,
    pub accounts: Vec<AccountId>,
}

pub fn account(kind: AccountKind, limit: i64) -> NewAccount {
    NewAccount {
        kind,
        currency: None,
        credit_limit_minor: limit,
    }
}

/// Adds a customer with the given accounts, funds deposit accounts and logs in.
pub fn client(bank: &Bank, username: &str, kinds: &[NewAccount], funding: i64) -> Client {
    let created = bank
        .add_customer(
            NewCustomer {
                full_name: format!("{username} customer"),
                ic_passport_no: format!("IC-{username}"),
                email: format!("{username}@example.test"),
                postal_address: "1 Jalan Test".into(),
                phone: "012-3456789".into(),
                secure_delivery_contact: String::new(),
                accounts: kinds.to_vec(),
            },
            username,
            PASSWORD,
            false,
        )
        .unwrap();
    for (id, kind) in created.accounts.iter().zip(kinds) {
        if funding > 0 && kind.kind != AccountKind::CreditCard {
            bank.deposit(id, Money::myr(funding), "opening deposit").unwrap();
        }
    }
    let token = bank.login(username, PASSWORD).unwrap().token;
    Client {
        username: username.into(),
        token,
        accounts: created.accounts,
    }
}

/// Drives a random mix of business operations; failures are part of the mix.
pub fn random_workload(bank: &Bank, clock: &ManualClock, rng: &mut StdRng, ops: usize) {
    let kinds = [
        account(AccountKind::Current, 0),
        account(AccountKind::Saving, 0),
        account(AccountKind::CreditCard, 50_000),
    ];
    let a = client(bank, "alice", &kinds, 100_000);
    let b = client(bank, "bob", &kinds, 100_000);
    let ben = bank.save_beneficiary(&a.token, b.accounts[0].as_str(), "bob").unwrap();
    let reg = bank.register_biller(&b.token, "TNB", "TNB-1", "Bob").unwrap();
    for _ in 0..ops {
        let who = if rng.random_bool(0.5) { &a } else { &b };
        match rng.random_range(0..8) {
            0 => {
                let _ = bank.deposit(&who.accounts[rng.random_range(0..2)], Money::myr(rng.random_range(1..5_000)), "cash");
            }
            1 | 2 => {
                let tac = bank.issue_tac(&who.token).unwrap();
                let from = rng.random_range(0..2);
                let target = if std::ptr::eq(who, &a) && rng.random_bool(0.5) {
                    TargetRef::Beneficiary(ben.beneficiary_id)
                } else {
                    TargetRef::Own(who.accounts[(from + 1) % 3].clone())
                };
                let _ = bank.create_transfer(
                    &who.token,
                    TransferRequest {
                        source_account: who.accounts[from].clone(),
                        target,
                        amount: Money::myr(rng.random_range(1..30_000)),
                        effective_date: clock.today() + chrono::Days::new(rng.random_range(0..3)),
                        tac,
                        notify_email: None,
                    },
                );
            }
            3 => {
                let _ = bank.pay_registered(
                    &b.token,
                    bank_core::bank::RegisteredPaymentRequest {
                        registration_id: reg.registration_id,
                        payer_account: Some(b.accounts[rng.random_range(0..2)].clone()),
                        amount: Money::myr(rng.random_range(1..20_000)),
                        bill_ref: None,
                        effective_date: clock.today() + chrono::Days::new(rng.random_range(0..2)),
                    },
                );
            }
            4 => {
                let _ = bank.login(&who.username, if rng.random_bool(0.8) { PASSWORD } else { "nope" });
            }
            5 => {
                clock.advance_secs(rng.random_range(60..40_000));
                let _ = bank.run_value_date(clock.today());
            }
            6 => {
                let _ = bank.request_statement(&who.token, &who.accounts[0], "online");
            }
            _ => {
                let _ = bank.update_profile(
                    &who.token,
                    bank_core::identity::ProfileUpdate {
                        phone: Some(format!("01{}", rng.random_range(0..99_999_999))),
                        ..Default::default()
                    },
                );
            }
        }
    }
}
