//! Fixture loading for demos and test environments.
//!
//! ```toml
//! [admin]
//! username = "admin"
//! password = "Adm1n!pass"
//!
//! [[customers]]
//! username = "alice"
//! password = "Alic3!pass"
//! full_name = "Alice Tan"
//! ic_passport_no = "880101-14-5566"
//!
//! [[customers.accounts]]
//! kind = "current"
//! opening_minor = 150000
//! ```

use anyhow::Context;
use bank_core::bank::{NewAccount, NewCustomer};
use bank_core::ledger::AccountKind;
use bank_core::{Bank, Currency, Money};
use serde::{Deserialize, Serialize};

use crate::config::AdminCredential;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureAccount {
    pub kind: AccountKind,
    #[serde(default)]
    pub currency: Option<Currency>,
    #[serde(default)]
    pub credit_limit_minor: i64,
    /// Deposited from clearing right after opening.
    #[serde(default)]
    pub opening_minor: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureCustomer {
    pub username: String,
    pub password: String,
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
    pub must_change: bool,
    #[serde(default)]
    pub accounts: Vec<FixtureAccount>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    #[serde(default)]
    pub admin: Option<AdminCredential>,
    #[serde(default)]
    pub customers: Vec<FixtureCustomer>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SeedReport {
    pub admin_created: bool,
    pub customers_created: Vec<String>,
    /// Usernames that already existed and were left alone.
    pub skipped: Vec<String>,
}

impl Fixture {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("parsing fixture")
    }
}

/// Applies a fixture. Re-running it is harmless: existing usernames are skipped.
pub fn apply(bank: &Bank, fixture: &Fixture) -> anyhow::Result<SeedReport> {
    let mut report = SeedReport::default();
    if let Some(admin) = &fixture.admin {
        report.admin_created = bank.bootstrap_admin(&admin.username, &admin.password)?;
    }
    for c in &fixture.customers {
        if bank.with_state(|s| s.credentials.contains_key(&c.username)) {
            report.skipped.push(c.username.clone());
            continue;
        }
        let created = bank
            .add_customer(
                NewCustomer {
                    full_name: c.full_name.clone(),
                    ic_passport_no: c.ic_passport_no.clone(),
                    email: c.email.clone(),
                    postal_address: c.postal_address.clone(),
                    phone: c.phone.clone(),
                    secure_delivery_contact: c.secure_delivery_contact.clone(),
                    accounts: c
                        .accounts
                        .iter()
                        .map(|a| NewAccount {
                            kind: a.kind,
                            currency: a.currency,
                            credit_limit_minor: a.credit_limit_minor,
                        })
                        .collect(),
                },
                &c.username,
                &c.password,
                c.must_change,
            )
            .with_context(|| format!("adding customer {}", c.username))?;
        for (id, a) in created.accounts.iter().zip(&c.accounts) {
            if a.opening_minor > 0 {
                let amount = Money::new(a.opening_minor, a.currency.unwrap_or_default());
                bank.deposit(id, amount, "Opening deposit")
                    .with_context(|| format!("funding {id}"))?;
            }
        }
        report.customers_created.push(c.username.clone());
    }
    Ok(report)
}
