#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{HeaderMap, Request, StatusCode};
use axum::Router;
use bank_core::bank::BankConfig;
use bank_core::identity::DigestSettings;
use bank_core::{Bank, ManualClock};
use chrono::NaiveDate;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const PASSWORD: &str = "Str0ng!pass";
pub const ADMIN: (&str, &str) = ("admin", "Adm1n!secret");

pub fn config() -> BankConfig {
    BankConfig {
        digest: DigestSettings { algorithm: "pbkdf2-sha256".into(), iterations: 1 },
        notifier: "null".into(),
        ..BankConfig::default()
    }
}

pub struct Harness {
    pub bank: Arc<Bank>,
    pub clock: ManualClock,
    pub app: Router,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub raw: String,
    pub json: Value,
}

impl Reply {
    pub fn data(&self) -> &Value {
        &self.json["data"]
    }

    pub fn code(&self) -> &str {
        self.json["error"]["code"].as_str().unwrap_or("")
    }
}

impl Harness {
    pub fn new(cfg: BankConfig) -> Self {
        let clock = ManualClock::starting_on(NaiveDate::from_ymd_opt(2025, 3, 3).unwrap());
        let (bank, _) = Bank::builder(cfg).clock(Arc::new(clock.clone())).in_memory().unwrap();
        Self::wrap(bank, clock)
    }

    pub fn wrap(bank: Bank, clock: ManualClock) -> Self {
        let bank = Arc::new(bank);
        bank.bootstrap_admin(ADMIN.0, ADMIN.1).unwrap();
        let app = bank_server::router(bank.clone());
        Harness { bank, clock, app }
    }

    pub async fn call(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        self.send(method, uri, token, body.map(|b| b.to_string()).unwrap_or_default()).await
    }

    pub async fn send(&self, method: &str, uri: &str, token: Option<&str>, body: String) -> Reply {
        let mut req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let res = self.app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
        let status = res.status();
        let headers = res.headers().clone();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let raw = String::from_utf8(bytes.to_vec()).unwrap();
        let json = serde_json::from_str(&raw).unwrap_or(Value::Null);
        Reply { status, headers, raw, json }
    }

    pub async fn login(&self, username: &str, password: &str) -> Reply {
        self.call("POST", "/login", None, Some(serde_json::json!({ "username": username, "password": password })))
            .await
    }

    pub async fn token(&self, username: &str, password: &str) -> String {
        let r = self.login(username, password).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
        r.data()["token"].as_str().unwrap().to_string()
    }

    /// Adds a customer through the admin route and clears the first-login password change.
    pub async fn customer(&self, username: &str, accounts: Value) -> (String, Vec<String>) {
        let admin = self.token(ADMIN.0, ADMIN.1).await;
        let ic = format!("IC-{username}");
        let r = self
            .call(
                "POST",
                "/admin/customers",
                Some(&admin),
                Some(serde_json::json!({
                    "username": username,
                    "initial_password": "Init1al!pw",
                    "full_name": format!("{username} fullname"),
                    "ic_passport_no": ic,
                    "email": format!("{username}@mail.test"),
                    "accounts": accounts,
                })),
            )
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
        let ids: Vec<String> = r.data()["accounts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        let token = self.token(username, "Init1al!pw").await;
        let r = self
            .call(
                "POST",
                "/password",
                Some(&token),
                Some(serde_json::json!({ "ic_passport_no": ic, "new_password": PASSWORD })),
            )
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.raw);
        (token, ids)
    }
}
