//! Customers, credentials, password policy and live sessions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::Mutex;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;

use crate::clock::Timestamp;
use crate::error::{BankError, Result};
use crate::ledger::CustomerId;
use crate::registry::{Named, Registry};

/// Characters the bank accepts as "special" in passwords, as published to customers.
pub const SPECIAL_CHARS: &str = "!@#%&^&*()_+=[{}|\\:;'\",<.> /?";

/// The timeout warning is raised this many seconds before expiry.
pub const WARNING_WINDOW_S: i64 = 30;

pub const SALT_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerStatus {
    Active,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Customer {
    pub customer_id: CustomerId,
    pub full_name: String,
    pub ic_passport_no: String,
    pub email: String,
    pub postal_address: String,
    pub phone: String,
    pub secure_delivery_contact: String,
    pub atm_enabled: bool,
    pub status: CustomerStatus,
}

/// Profile fields a customer may change online.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileUpdate {
    pub email: Option<String>,
    pub postal_address: Option<String>,
    pub phone: Option<String>,
    pub secure_delivery_contact: Option<String>,
}

impl ProfileUpdate {
    pub const FIELDS: [&'static str; 4] =
        ["email", "postal_address", "phone", "secure_delivery_contact"];

    /// Builds an update from loose key/value pairs, rejecting anything but the
    /// four editable fields.
    pub fn from_fields<'a>(
        fields: impl IntoIterator<Item = (&'a str, String)>,
    ) -> Result<ProfileUpdate> {
        let mut update = ProfileUpdate::default();
        for (key, value) in fields {
            match key {
                "email" => update.email = Some(value),
                "postal_address" => update.postal_address = Some(value),
                "phone" => update.phone = Some(value),
                "secure_delivery_contact" => update.secure_delivery_contact = Some(value),
                other => return Err(BankError::InvalidField(other.to_string())),
            }
        }
        Ok(update)
    }

    pub fn apply_to(&self, customer: &mut Customer) {
        if let Some(v) = &self.email {
            customer.email = v.clone();
        }
        if let Some(v) = &self.postal_address {
            customer.postal_address = v.clone();
        }
        if let Some(v) = &self.phone {
            customer.phone = v.clone();
        }
        if let Some(v) = &self.secure_delivery_contact {
            customer.secure_delivery_contact = v.clone();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "customer_id")]
pub enum Principal {
    Customer(CustomerId),
    Admin,
}

/// Salted, iterated one-way digest of a password.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasswordDigest {
    pub algorithm: String,
    pub iterations: u32,
    pub salt: String,
    pub digest: String,
}

impl fmt::Debug for PasswordDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PasswordDigest")
            .field("algorithm", &self.algorithm)
            .field("iterations", &self.iterations)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub username: String,
    pub principal: Principal,
    pub password: PasswordDigest,
    pub password_set_at: Timestamp,
    pub failed_attempts: u32,
    pub locked: bool,
    pub must_change: bool,
}

impl Credential {
    pub fn is_admin(&self) -> bool {
        self.principal == Principal::Admin
    }

    pub fn password_expired(&self, policy: &PasswordPolicy, now: Timestamp) -> bool {
        match policy.max_age_days {
            Some(days) => now.0 - self.password_set_at.0 > days as i64 * 86_400_000,
            None => false,
        }
    }
}

/// One-way password digesting algorithm, selected by name.
pub trait CredentialDigester: Named + Send + Sync {
    fn digest(&self, password: &[u8], salt: &[u8], iterations: u32) -> Vec<u8>;
}

pub struct Pbkdf2Sha256;

impl Named for Pbkdf2Sha256 {
    fn name(&self) -> &str {
        "pbkdf2-sha256"
    }
}

impl CredentialDigester for Pbkdf2Sha256 {
    fn digest(&self, password: &[u8], salt: &[u8], iterations: u32) -> Vec<u8> {
        let mut out = vec![0u8; 32];
        pbkdf2::pbkdf2_hmac::<sha2::Sha256>(password, salt, iterations, &mut out);
        out
    }
}

pub struct Pbkdf2Sha512;

impl Named for Pbkdf2Sha512 {
    fn name(&self) -> &str {
        "pbkdf2-sha512"
    }
}

impl CredentialDigester for Pbkdf2Sha512 {
    fn digest(&self, password: &[u8], salt: &[u8], iterations: u32) -> Vec<u8> {
        let mut out = vec![0u8; 64];
        pbkdf2::pbkdf2_hmac::<sha2::Sha512>(password, salt, iterations, &mut out);
        out
    }
}

pub fn default_digesters() -> Registry<dyn CredentialDigester> {
    let mut reg: Registry<dyn CredentialDigester> = Registry::new("credential digester");
    reg.register(Arc::new(Pbkdf2Sha256));
    reg.register(Arc::new(Pbkdf2Sha512));
    reg
}

/// Which digester and work factor new passwords are hashed with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DigestSettings {
    pub algorithm: String,
    pub iterations: u32,
}

impl Default for DigestSettings {
    fn default() -> Self {
        DigestSettings {
            algorithm: "pbkdf2-sha256".into(),
            iterations: 100_000,
        }
    }
}

pub fn hash_password(
    digesters: &Registry<dyn CredentialDigester>,
    settings: &DigestSettings,
    password: &str,
) -> Result<PasswordDigest> {
    let digester = digesters.get(&settings.algorithm)?;
    let mut salt = [0u8; SALT_LEN];
    rand::rng().fill_bytes(&mut salt);
    let digest = digester.digest(password.as_bytes(), &salt, settings.iterations);
    Ok(PasswordDigest {
        algorithm: settings.algorithm.clone(),
        iterations: settings.iterations,
        salt: hex::encode(salt),
        digest: hex::encode(digest),
    })
}

pub fn verify_password(
    digesters: &Registry<dyn CredentialDigester>,
    stored: &PasswordDigest,
    candidate: &str,
) -> Result<bool> {
    let digester = digesters.get(&stored.algorithm)?;
    let salt = hex::decode(&stored.salt).map_err(|e| BankError::CorruptSnapshot(e.to_string()))?;
    let expected =
        hex::decode(&stored.digest).map_err(|e| BankError::CorruptSnapshot(e.to_string()))?;
    let actual = digester.digest(candidate.as_bytes(), &salt, stored.iterations);
    Ok(actual.ct_eq(&expected).into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PasswordPolicy {
    pub min_length: usize,
    pub special_chars: String,
    pub require_special: bool,
    /// Reject characters that are neither ASCII alphanumerics nor in `special_chars`.
    pub restrict_charset: bool,
    /// `None` disables periodic password change.
    pub max_age_days: Option<u32>,
    pub max_failed_attempts: u32,
}

impl Default for PasswordPolicy {
    fn default() -> Self {
        PasswordPolicy {
            min_length: 8,
            special_chars: SPECIAL_CHARS.to_string(),
            require_special: true,
            restrict_charset: true,
            max_age_days: Some(90),
            max_failed_attempts: 3,
        }
    }
}

impl PasswordPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.max_failed_attempts < 1 {
            return Err(BankError::InvalidConfig("max_failed_attempts must be >= 1".into()));
        }
        if self.special_chars != SPECIAL_CHARS {
            return Err(BankError::InvalidConfig(
                "special_chars must be the published special character set".into(),
            ));
        }
        Ok(())
    }

    /// Names of every rule `candidate` breaks; empty when acceptable.
    pub fn violations(&self, candidate: &str) -> Vec<String> {
        let mut broken = Vec::new();
        if candidate.chars().count() < self.min_length {
            broken.push("min_length".to_string());
        }
        let is_special = |c: char| self.special_chars.contains(c);
        if self.require_special && !candidate.chars().any(is_special) {
            broken.push("require_special".to_string());
        }
        if self.restrict_charset
            && !candidate
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || is_special(c))
        {
            broken.push("charset".to_string());
        }
        broken
    }

    pub fn check(&self, candidate: &str) -> Result<()> {
        let broken = self.violations(candidate);
        if broken.is_empty() {
            Ok(())
        } else {
            Err(BankError::PolicyViolation(broken))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub username: String,
    pub principal: Principal,
    pub created_at: Timestamp,
    pub last_activity_at: Timestamp,
    pub idle_timeout_s: i64,
    pub warning_window_s: i64,
    /// Set while a password change is forced; only the change is allowed.
    pub must_change: bool,
}

impl Session {
    pub fn is_expired(&self, now: Timestamp) -> bool {
        now.0 - self.last_activity_at.0 > self.idle_timeout_s * 1000
    }

    pub fn status(&self, now: Timestamp) -> SessionStatus {
        let remaining_s = self.idle_timeout_s - now.secs_since(self.last_activity_at);
        SessionStatus {
            remaining_s,
            warn: remaining_s > 0 && remaining_s <= self.warning_window_s,
        }
    }

    pub fn customer_id(&self) -> Option<&CustomerId> {
        match &self.principal {
            Principal::Customer(id) => Some(id),
            Principal::Admin => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub remaining_s: i64,
    pub warn: bool,
}

/// Opaque bearer token with 256 bits of entropy.
pub fn new_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

/// How long an ended token is remembered so reuse reports expiry rather than
/// an unknown token.
const TOMBSTONE_TTL_MS: i64 = 24 * 3600 * 1000;

#[derive(Debug, Default)]
struct SessionsInner {
    live: HashMap<String, Session>,
    /// Tokens that were logged out or timed out, with the time they ended.
    ended: HashMap<String, Timestamp>,
}

impl SessionsInner {
    fn gone(&self, token: &str) -> BankError {
        if self.ended.contains_key(token) {
            BankError::SessionExpired
        } else {
            BankError::Unauthenticated
        }
    }

    fn expire(&mut self, token: &str, now: Timestamp) -> BankError {
        self.live.remove(token);
        self.ended.insert(token.to_string(), now);
        BankError::SessionExpired
    }
}

/// Live sessions. Not persisted: a restart signs everybody off.
#[derive(Debug, Default)]
pub struct SessionTable {
    inner: Mutex<SessionsInner>,
}

impl SessionTable {
    pub fn new() -> Self {
        SessionTable::default()
    }

    pub fn open(
        &self,
        username: &str,
        principal: Principal,
        idle_timeout_s: i64,
        must_change: bool,
        now: Timestamp,
    ) -> Session {
        let mut inner = self.inner.lock();
        let mut token = new_token();
        while inner.live.contains_key(&token) || inner.ended.contains_key(&token) {
            token = new_token();
        }
        let session = Session {
            token: token.clone(),
            username: username.to_string(),
            principal,
            created_at: now,
            last_activity_at: now,
            idle_timeout_s,
            warning_window_s: WARNING_WINDOW_S,
            must_change,
        };
        inner.live.insert(token, session.clone());
        session
    }

    /// Returns the live session without refreshing it. Expired sessions are removed.
    pub fn peek(&self, token: &str, now: Timestamp) -> Result<Session> {
        let mut inner = self.inner.lock();
        match inner.live.get(token) {
            Some(s) if s.is_expired(now) => Err(inner.expire(token, now)),
            Some(s) => Ok(s.clone()),
            None => Err(inner.gone(token)),
        }
    }

    /// Marks activity on a live session.
    pub fn touch(&self, token: &str, now: Timestamp) -> Result<Session> {
        let mut inner = self.inner.lock();
        match inner.live.get_mut(token) {
            Some(s) if s.is_expired(now) => Err(inner.expire(token, now)),
            Some(s) => {
                s.last_activity_at = now;
                Ok(s.clone())
            }
            None => Err(inner.gone(token)),
        }
    }

    /// Ends a live session (sign-off).
    pub fn end(&self, token: &str, now: Timestamp) -> Result<Session> {
        let mut inner = self.inner.lock();
        match inner.live.get(token) {
            Some(s) if s.is_expired(now) => Err(inner.expire(token, now)),
            Some(_) => {
                let session = inner.live.remove(token).expect("present");
                inner.ended.insert(token.to_string(), now);
                Ok(session)
            }
            None => Err(inner.gone(token)),
        }
    }

    pub fn is_live(&self, token: &str) -> bool {
        self.inner.lock().live.contains_key(token)
    }

    pub fn clear_must_change(&self, token: &str) {
        if let Some(s) = self.inner.lock().live.get_mut(token) {
            s.must_change = false;
        }
    }

    /// Ends every session belonging to `username`; returns their tokens.
    pub fn end_user(&self, username: &str, now: Timestamp) -> Vec<String> {
        let mut inner = self.inner.lock();
        let tokens: Vec<String> = inner
            .live
            .values()
            .filter(|s| s.username == username)
            .map(|s| s.token.clone())
            .collect();
        for t in &tokens {
            inner.expire(t, now);
        }
        tokens
    }

    /// Removes expired sessions and stale tombstones; returns how many sessions were dropped.
    pub fn sweep(&self, now: Timestamp) -> usize {
        let mut inner = self.inner.lock();
        let expired: Vec<String> = inner
            .live
            .values()
            .filter(|s| s.is_expired(now))
            .map(|s| s.token.clone())
            .collect();
        for t in &expired {
            inner.expire(t, now);
        }
        inner.ended.retain(|_, at| now.0 - at.0 <= TOMBSTONE_TTL_MS);
        expired.len()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn special_set_is_the_published_one() {
        assert_eq!(SPECIAL_CHARS, r#"!@#%&^&*()_+=[{}|\:;'",<.> /?"#);
    }

    #[test]
    fn policy_accepts_strong_password() {
        let policy = PasswordPolicy::default();
        assert!(policy.check("Str0ng!pass").is_ok());
    }

    #[test]
    fn policy_reports_each_broken_rule() {
        let policy = PasswordPolicy::default();
        assert_eq!(policy.violations("Ab1!"), ["min_length"]);
        assert_eq!(policy.violations("abcdefgh1"), ["require_special"]);
        assert_eq!(policy.violations("abcdefg!\t"), ["charset"]);
        assert_eq!(policy.violations("ab~"), ["min_length", "require_special", "charset"]);
    }

    #[test]
    fn every_special_char_is_accepted() {
        let policy = PasswordPolicy::default();
        for c in SPECIAL_CHARS.chars() {
            let pw = format!("Passw0rd{c}");
            assert!(policy.check(&pw).is_ok(), "{c:?} rejected");
        }
    }

    #[test]
    fn digest_roundtrip_and_salting() {
        let reg = default_digesters();
        let settings = DigestSettings {
            algorithm: "pbkdf2-sha256".into(),
            iterations: 10,
        };
        let a = hash_password(&reg, &settings, "Str0ng!pass").unwrap();
        let b = hash_password(&reg, &settings, "Str0ng!pass").unwrap();
        assert_ne!(a.salt, b.salt);
        assert_ne!(a.digest, b.digest);
        assert!(verify_password(&reg, &a, "Str0ng!pass").unwrap());
        assert!(!verify_password(&reg, &a, "Str0ng!pasS").unwrap());
        assert_eq!(hex::decode(&a.salt).unwrap().len(), SALT_LEN);
        assert!(!format!("{a:?}").contains(&a.digest));
    }

    #[test]
    fn sha512_digester_registered() {
        let reg = default_digesters();
        let settings = DigestSettings {
            algorithm: "pbkdf2-sha512".into(),
            iterations: 5,
        };
        let d = hash_password(&reg, &settings, "x").unwrap();
        assert_eq!(d.digest.len(), 128);
        assert!(verify_password(&reg, &d, "x").unwrap());
        let bad = DigestSettings {
            algorithm: "md5".into(),
            iterations: 1,
        };
        assert_eq!(hash_password(&reg, &bad, "x").unwrap_err().code(), "UNKNOWN_STRATEGY");
    }

    fn table_with_session(timeout: i64) -> (SessionTable, String) {
        let table = SessionTable::new();
        let s = table.open("u", Principal::Admin, timeout, false, Timestamp(0));
        (table, s.token)
    }

    #[test]
    fn heartbeat_arithmetic() {
        let (table, token) = table_with_session(300);
        let s = table.peek(&token, Timestamp(200_000)).unwrap();
        assert_eq!(s.status(Timestamp(200_000)), SessionStatus { remaining_s: 100, warn: false });
        let s = table.peek(&token, Timestamp(275_000)).unwrap();
        assert_eq!(s.status(Timestamp(275_000)), SessionStatus { remaining_s: 25, warn: true });
        assert_eq!(table.peek(&token, Timestamp(301_000)), Err(BankError::SessionExpired));
        assert!(!table.is_live(&token));
        assert_eq!(table.touch(&token, Timestamp(301_000)), Err(BankError::SessionExpired));
    }

    #[test]
    fn touch_refreshes_activity() {
        let (table, token) = table_with_session(300);
        table.touch(&token, Timestamp(299_000)).unwrap();
        let s = table.peek(&token, Timestamp(299_000)).unwrap();
        assert_eq!(s.status(Timestamp(299_000)).remaining_s, 300);
        assert!(!s.status(Timestamp(299_000)).warn);
    }

    #[test]
    fn ended_tokens_differ_from_unknown_ones() {
        let (table, token) = table_with_session(300);
        table.end(&token, Timestamp(1)).unwrap();
        assert_eq!(table.end(&token, Timestamp(2)).unwrap_err(), BankError::SessionExpired);
        assert_eq!(table.peek("nope", Timestamp(2)).unwrap_err(), BankError::Unauthenticated);
    }

    #[test]
    fn sweep_drops_expired() {
        let (table, _) = table_with_session(10);
        table.open("v", Principal::Admin, 1000, false, Timestamp(0));
        assert_eq!(table.sweep(Timestamp(11_000)), 1);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn tokens_do_not_collide() {
        let tokens: HashSet<_> = (0..100_000).map(|_| new_token()).collect();
        assert_eq!(tokens.len(), 100_000);
    }

    #[test]
    fn profile_update_rejects_immutable_fields() {
        let err = ProfileUpdate::from_fields([("customer_id", "X".to_string())]).unwrap_err();
        assert_eq!(err, BankError::InvalidField("customer_id".into()));
    }
}
