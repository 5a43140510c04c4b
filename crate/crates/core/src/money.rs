//! Exact money arithmetic in integer minor units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BankError, Result};

pub const DEFAULT_CURRENCY: &str = "MYR";

/// ISO-4217 style three letter currency code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Currency([u8; 3]);

impl Currency {
    pub const MYR: Currency = Currency(*b"MYR");

    pub fn new(code: &str) -> Result<Self> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_uppercase) {
            return Err(BankError::InvalidCurrency(code.to_string()));
        }
        Ok(Currency([bytes[0], bytes[1], bytes[2]]))
    }

    pub fn as_str(&self) -> &str {
        // constructed only from ASCII uppercase
        std::str::from_utf8(&self.0).expect("currency code is ascii")
    }
}

impl Default for Currency {
    fn default() -> Self {
        Currency::MYR
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Currency {
    type Err = BankError;

    fn from_str(s: &str) -> Result<Self> {
        Currency::new(s)
    }
}

impl Serialize for Currency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Currency {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Currency::new(&raw).map_err(serde::de::Error::custom)
    }
}

/// A signed amount of minor units (sen for MYR) tagged with its currency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Money {
    pub amount_minor: i64,
    #[serde(default)]
    pub currency: Currency,
}

impl Money {
    pub const fn new(amount_minor: i64, currency: Currency) -> Self {
        Money {
            amount_minor,
            currency,
        }
    }

    /// Amount in the default currency.
    pub const fn myr(amount_minor: i64) -> Self {
        Money::new(amount_minor, Currency::MYR)
    }

    pub const fn zero(currency: Currency) -> Self {
        Money::new(0, currency)
    }

    pub fn is_zero(&self) -> bool {
        self.amount_minor == 0
    }

    pub fn is_positive(&self) -> bool {
        self.amount_minor > 0
    }

    pub fn checked_add(self, other: Money) -> Result<Money> {
        self.same_currency(&other)?;
        self.amount_minor
            .checked_add(other.amount_minor)
            .map(|amount| Money::new(amount, self.currency))
            .ok_or(BankError::AmountOverflow)
    }

    pub fn checked_sub(self, other: Money) -> Result<Money> {
        self.same_currency(&other)?;
        self.amount_minor
            .checked_sub(other.amount_minor)
            .map(|amount| Money::new(amount, self.currency))
            .ok_or(BankError::AmountOverflow)
    }

    pub fn checked_neg(self) -> Result<Money> {
        self.amount_minor
            .checked_neg()
            .map(|amount| Money::new(amount, self.currency))
            .ok_or(BankError::AmountOverflow)
    }

    fn same_currency(&self, other: &Money) -> Result<()> {
        if self.currency != other.currency {
            return Err(BankError::CurrencyMismatch {
                left: self.currency.to_string(),
                right: other.currency.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Money {
    /// Renders `RM`-style figures, e.g. `MYR 100.00`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.amount_minor < 0 { "-" } else { "" };
        let abs = self.amount_minor.unsigned_abs();
        write!(f, "{} {}{}.{:02}", self.currency, sign, abs / 100, abs % 100)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact() {
        let a = Money::myr(25_000);
        let b = Money::myr(10_000);
        assert_eq!(a.checked_sub(b).unwrap(), Money::myr(15_000));
        assert_eq!(a.checked_add(b).unwrap(), Money::myr(35_000));
    }

    #[test]
    fn currency_mismatch_is_rejected() {
        let usd = Money::new(100, Currency::new("USD").unwrap());
        let err = Money::myr(100).checked_add(usd).unwrap_err();
        assert_eq!(err.code(), "CURRENCY_MISMATCH");
    }

    #[test]
    fn overflow_is_an_error() {
        assert!(Money::myr(i64::MAX).checked_add(Money::myr(1)).is_err());
        assert!(Money::myr(i64::MIN).checked_neg().is_err());
    }

    #[test]
    fn bad_currency_codes() {
        for code in ["", "MY", "myr", "MYRR", "M1R"] {
            assert!(Currency::new(code).is_err(), "{code}");
        }
    }

    #[test]
    fn display() {
        assert_eq!(Money::myr(10_000).to_string(), "MYR 100.00");
        assert_eq!(Money::myr(-5).to_string(), "MYR -0.05");
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&Money::myr(5000)).unwrap();
        assert_eq!(json, r#"{"amount_minor":5000,"currency":"MYR"}"#);
        let back: Money = serde_json::from_str(r#"{"amount_minor":7}"#).unwrap();
        assert_eq!(back, Money::myr(7));
    }
}
