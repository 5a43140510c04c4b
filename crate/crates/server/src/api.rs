//! JSON routes over the banking core.
//!
//! Every response uses one envelope: `{ok, data}` on success, `{ok, error}` on
//! failure. Authenticated responses also carry `session: {remaining_s, warn}`
//! and the same values as `x-session-remaining` / `x-session-warn` headers.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use bank_core::bank::{NewCustomer, OpenPaymentRequest, RegisteredPaymentRequest, TransferRequest};
use bank_core::identity::{ProfileUpdate, SessionStatus};
use bank_core::ledger::RETENTION_DAYS;
use bank_core::payments::BeneficiaryUpdate;
use bank_core::{AccountId, Bank, BankError, CustomerId, Money};
use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const REMAINING_HEADER: &str = "x-session-remaining";
pub const WARN_HEADER: &str = "x-session-warn";
pub const MAX_PAGE: usize = 1_000;

/// Wire form of a failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub http_status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_string(),
            message: message.into(),
            http_status: status.as_u16(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "SCHEMA_VIOLATION", message)
    }

    pub fn unknown_route() -> Self {
        Self::new(StatusCode::NOT_FOUND, "UNKNOWN_ROUTE", "no such route")
    }

    fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

/// Non-standard status used for idle sessions, so clients can tell them from missing auth.
pub fn session_expired_status() -> StatusCode {
    StatusCode::from_u16(440).expect("valid status code")
}

pub fn status_for(err: &BankError) -> StatusCode {
    use BankError::*;
    match err {
        Unauthenticated | InvalidCredentials => StatusCode::UNAUTHORIZED,
        SessionExpired => session_expired_status(),
        Locked | CustomerCancelled | NotAdmin | NotCustomer | NotOwner(_) | PasswordChangeRequired
        | IcMismatch | InvalidTac => StatusCode::FORBIDDEN,
        UnknownAccount(_) | UnknownUser(_) | UnknownCustomer(_) | UnknownBeneficiary(_)
        | UnknownTransfer(_) | UnknownRegistration(_) | UnknownPayment(_) | UnknownCheque(_)
        | UnknownChequeBook(_) => StatusCode::NOT_FOUND,
        DuplicateUsername(_) | DuplicateBeneficiary(_) | DuplicateRegistration | AlreadyCancelled
        | AlreadyPaid | AlreadyTerminal | ChequeStopped | NotPending | LimitExceeded
        | DateRegression { .. } | AccountClosed(_) | NoBase => StatusCode::CONFLICT,
        InsufficientFunds(_) | OverLimit(_) | Unbalanced | InvalidEntry(_) | CurrencyMismatch { .. }
        | InvalidCurrency(_) | AmountOverflow | PolicyViolation(_) | NonPositiveAmount | PastDate
        | SameAccount | NotCurrentAccount | InvalidLeaves(_) => StatusCode::UNPROCESSABLE_ENTITY,
        InvalidRange | InvalidChannel(_) | InvalidField(_) | MissingField(_) => StatusCode::BAD_REQUEST,
        StorageFailure(_) | TargetUnwritable(_) => StatusCode::SERVICE_UNAVAILABLE,
        CorruptJournal(_) | CorruptSnapshot(_) | VerifyFailed(_) | UnknownStrategy { .. }
        | InvalidConfig(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<BankError> for ApiError {
    fn from(err: BankError) -> Self {
        ApiError::new(status_for(&err), err.code(), err.to_string())
    }
}

#[derive(Serialize)]
struct Envelope<T> {
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ApiError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    session: Option<SessionStatus>,
}

fn respond<T: Serialize>(result: Result<T, ApiError>, session: Option<SessionStatus>) -> Response {
    let (status, body) = match result {
        Ok(data) => (
            StatusCode::OK,
            Envelope { ok: true, data: Some(data), error: None, session },
        ),
        Err(error) => (
            error.status(),
            Envelope { ok: false, data: None, error: Some(error), session },
        ),
    };
    let mut response = (status, axum::Json(body)).into_response();
    if let Some(s) = session {
        let headers = response.headers_mut();
        headers.insert(REMAINING_HEADER, HeaderValue::from(s.remaining_s));
        headers.insert(WARN_HEADER, HeaderValue::from_static(if s.warn { "true" } else { "false" }));
    }
    response
}

#[derive(Clone)]
pub struct AppState {
    pub bank: Arc<Bank>,
}

fn bearer(headers: &HeaderMap) -> Result<String, ApiError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .ok_or_else(|| BankError::Unauthenticated.into())
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let bytes: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| ApiError::schema(e.to_string()))
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> Result<T, ApiError> {
    p.map(|Path(v)| v).map_err(|e| ApiError::schema(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|e| ApiError::schema(e.body_text()))
}

/// Runs a bank call off the async executor; digesting passwords is slow on purpose.
async fn blocking<T: Send + 'static>(
    app: &AppState,
    f: impl FnOnce(&Bank) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let bank = app.bank.clone();
    tokio::task::spawn_blocking(move || f(&bank))
        .await
        .unwrap_or_else(|e| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string())))
}

/// An authenticated call: token checks happen inside the bank operation, and the
/// response reports what is left of the session afterwards.
async fn authed<T, F>(app: &AppState, headers: &HeaderMap, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Bank, &str) -> Result<T, ApiError> + Send + 'static,
{
    let token = match bearer(headers) {
        Ok(t) => t,
        Err(e) => return respond::<()>(Err(e), None),
    };
    let result = blocking(app, move |bank| {
        let out = f(bank, &token);
        Ok((out, bank.session_status(&token)))
    })
    .await;
    match result {
        Ok((out, session)) => respond(out, session),
        Err(e) => respond::<()>(Err(e), None),
    }
}

async fn public<T, F>(app: &AppState, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Bank) -> Result<T, ApiError> + Send + 'static,
{
    respond(blocking(app, f).await, None)
}

fn message(text: impl Into<String>) -> Value {
    json!({ "message": text.into() })
}

// ---- request bodies ---------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoginBody {
    username: String,
    password: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PasswordBody {
    ic_passport_no: String,
    new_password: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BeneficiaryBody {
    account_no: String,
    #[serde(default)]
    nickname: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BillerBody {
    corporation: String,
    bill_account_no: String,
    holder_name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeregisterBody {
    registration_ids: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChequeBookBody {
    account_id: AccountId,
    leaves: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatementBody {
    account_id: AccountId,
    channel: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddCustomerBody {
    username: String,
    initial_password: String,
    #[serde(flatten)]
    customer: NewCustomer,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresentBody {
    #[serde(default)]
    account_id: Option<AccountId>,
    cheque_no: String,
    amount: Money,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueDateBody {
    #[serde(default)]
    date: Option<NaiveDate>,
}

#[derive(Deserialize)]
struct RangeQuery {
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
}

impl RangeQuery {
    /// Missing ends default to the whole retention window up to today.
    fn resolve(&self, today: NaiveDate) -> (NaiveDate, NaiveDate) {
        let to = self.to.unwrap_or(today);
        let from = self
            .from
            .unwrap_or_else(|| today - chrono::Days::new(RETENTION_DAYS as u64));
        (from, to)
    }
}

#[derive(Deserialize)]
struct PageQuery {
    #[serde(default)]
    offset: usize,
    limit: Option<usize>,
}

// ---- handlers -----------------------------------------------------------------

async fn health(State(app): State<AppState>) -> Response {
    let health = app.bank.health();
    let status = if health.is_ok() { StatusCode::OK } else { StatusCode::SERVICE_UNAVAILABLE };
    let mut response = respond::<_>(Ok(health), None);
    *response.status_mut() = status;
    response
}

async fn login(State(app): State<AppState>, raw: Bytes) -> Response {
    let b: LoginBody = match body(&raw) {
        Ok(b) => b,
        Err(e) => return respond::<()>(Err(e), None),
    };
    match blocking(&app, move |bank| Ok(bank.login(&b.username, &b.password)?)).await {
        Ok(out) => {
            let session = Some(out.session);
            respond(Ok(out), session)
        }
        Err(e) => respond::<()>(Err(e), None),
    }
}

async fn logout(State(app): State<AppState>, headers: HeaderMap) -> Response {
    let token = match bearer(&headers) {
        Ok(t) => t,
        Err(e) => return respond::<()>(Err(e), None),
    };
    public(&app, move |bank| Ok(message(bank.logout(&token)?))).await
}

async fn heartbeat(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.heartbeat(token)?)).await
}

async fn session_continue(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.acknowledge_continue(token)?)).await
}

async fn change_password(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: PasswordBody = body(&raw)?;
        bank.change_password(token, &b.ic_passport_no, &b.new_password)?;
        Ok(message("Password changed"))
    })
    .await
}

async fn get_profile(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.profile(token)?)).await
}

async fn put_profile(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let fields: serde_json::Map<String, Value> = body(&raw)?;
        let mut pairs = Vec::new();
        for (key, value) in &fields {
            let Value::String(v) = value else {
                return Err(ApiError::schema(format!("{key} must be a string")));
            };
            pairs.push((key.as_str(), v.clone()));
        }
        let update = ProfileUpdate::from_fields(pairs)?;
        Ok(bank.update_profile(token, update)?)
    })
    .await
}

async fn cancel_atm(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| {
        bank.cancel_atm(token)?;
        Ok(message("ATM facilities cancelled"))
    })
    .await
}

async fn accounts(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.accounts(token)?)).await
}

async fn account_history(
    State(app): State<AppState>,
    headers: HeaderMap,
    id: Result<Path<String>, PathRejection>,
    range: Result<Query<RangeQuery>, QueryRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        let id = AccountId::new(path(id)?);
        let (from, to) = query(range)?.resolve(bank.today());
        Ok(bank.account_history(token, &id, from, to)?)
    })
    .await
}

async fn statements(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: StatementBody = body(&raw)?;
        Ok(bank.request_statement(token, &b.account_id, &b.channel)?)
    })
    .await
}

async fn issue_tac(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(json!({ "tac": bank.issue_tac(token)? }))).await
}

async fn list_beneficiaries(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.list_beneficiaries(token)?)).await
}

async fn save_beneficiary(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: BeneficiaryBody = body(&raw)?;
        Ok(bank.save_beneficiary(token, &b.account_no, &b.nickname)?)
    })
    .await
}

async fn update_beneficiary(
    State(app): State<AppState>,
    headers: HeaderMap,
    id: Result<Path<u64>, PathRejection>,
    raw: Bytes,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        let id = path(id)?;
        let update: BeneficiaryUpdate = body(&raw)?;
        Ok(bank.update_beneficiary(token, id, update)?)
    })
    .await
}

async fn delete_beneficiary(
    State(app): State<AppState>,
    headers: HeaderMap,
    id: Result<Path<u64>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        bank.delete_beneficiary(token, path(id)?)?;
        Ok(message("Beneficiary deleted"))
    })
    .await
}

async fn create_transfer(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let req: TransferRequest = body(&raw)?;
        Ok(bank.create_transfer(token, req)?)
    })
    .await
}

async fn cancel_transfer(
    State(app): State<AppState>,
    headers: HeaderMap,
    id: Result<Path<u64>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        bank.cancel_pending_transfer(token, path(id)?)?;
        Ok(message("Transfer cancelled"))
    })
    .await
}

async fn pending_transfers(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.pending_transfers(token)?)).await
}

async fn transfer_history(
    State(app): State<AppState>,
    headers: HeaderMap,
    range: Result<Query<RangeQuery>, QueryRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        let (from, to) = query(range)?.resolve(bank.today());
        Ok(bank.transfer_history(token, from, to)?)
    })
    .await
}

async fn list_billers(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.list_registrations(token)?)).await
}

async fn register_biller(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: BillerBody = body(&raw)?;
        Ok(bank.register_biller(token, &b.corporation, &b.bill_account_no, &b.holder_name)?)
    })
    .await
}

async fn deregister_billers(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: DeregisterBody = body(&raw)?;
        bank.deregister_billers(token, &b.registration_ids)?;
        Ok(message("Billers deregistered"))
    })
    .await
}

async fn pay_registered(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let req: RegisteredPaymentRequest = body(&raw)?;
        Ok(bank.pay_registered(token, req)?)
    })
    .await
}

async fn pay_open(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let req: OpenPaymentRequest = body(&raw)?;
        Ok(bank.open_payment(token, req)?)
    })
    .await
}

async fn cancel_payment(
    State(app): State<AppState>,
    headers: HeaderMap,
    id: Result<Path<u64>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        bank.cancel_future_payment(token, path(id)?)?;
        Ok(message("Payment cancelled"))
    })
    .await
}

async fn pending_payments(State(app): State<AppState>, headers: HeaderMap) -> Response {
    authed(&app, &headers, |bank, token| Ok(bank.enquire_future_payments(token)?)).await
}

async fn payment_history(
    State(app): State<AppState>,
    headers: HeaderMap,
    range: Result<Query<RangeQuery>, QueryRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        let (from, to) = query(range)?.resolve(bank.today());
        Ok(bank.bill_payment_history(token, from, to)?)
    })
    .await
}

async fn top_ten(State(app): State<AppState>) -> Response {
    public(&app, |bank| Ok(bank.top_ten_payees())).await
}

async fn cheque_status(
    State(app): State<AppState>,
    headers: HeaderMap,
    no: Result<Path<String>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| Ok(bank.cheque_by_number(token, &path(no)?)?)).await
}

async fn stop_cheque(
    State(app): State<AppState>,
    headers: HeaderMap,
    no: Result<Path<String>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| Ok(bank.stop_cheque_by_number(token, &path(no)?)?)).await
}

async fn request_cheque_book(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: ChequeBookBody = body(&raw)?;
        Ok(bank.request_cheque_book(token, &b.account_id, b.leaves)?)
    })
    .await
}

async fn admin_add_customer(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: AddCustomerBody = body(&raw)?;
        Ok(bank.admin_add_customer(token, b.customer, &b.username, &b.initial_password)?)
    })
    .await
}

async fn admin_cancel_customer(
    State(app): State<AppState>,
    headers: HeaderMap,
    id: Result<Path<String>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        bank.admin_cancel_customer(token, &CustomerId(path(id)?))?;
        Ok(message("Customer cancelled"))
    })
    .await
}

async fn admin_reinitialize(
    State(app): State<AppState>,
    headers: HeaderMap,
    username: Result<Path<String>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        bank.admin_reinitialize(token, &path(username)?)?;
        Ok(message("Credential re-initialized"))
    })
    .await
}

async fn admin_present_cheque(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: PresentBody = body(&raw)?;
        let account = match b.account_id {
            Some(a) => a,
            None => bank.cheque_account(&b.cheque_no)?,
        };
        Ok(bank.admin_present_cheque(token, &account, &b.cheque_no, b.amount)?)
    })
    .await
}

async fn admin_dispatch_cheque_book(
    State(app): State<AppState>,
    headers: HeaderMap,
    id: Result<Path<u64>, PathRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| Ok(bank.admin_dispatch_cheque_book(token, path(id)?)?)).await
}

async fn admin_run_value_date(State(app): State<AppState>, headers: HeaderMap, raw: Bytes) -> Response {
    authed(&app, &headers, move |bank, token| {
        let b: ValueDateBody = body(&raw)?;
        let date = b.date.unwrap_or_else(|| bank.today());
        Ok(bank.admin_run_value_date(token, date)?)
    })
    .await
}

async fn admin_transactions(
    State(app): State<AppState>,
    headers: HeaderMap,
    page: Result<Query<PageQuery>, QueryRejection>,
) -> Response {
    authed(&app, &headers, move |bank, token| {
        let page = query(page)?;
        let limit = page.limit.unwrap_or(100).min(MAX_PAGE);
        Ok(bank.admin_transactions(token, page.offset, limit)?)
    })
    .await
}

async fn unknown_route() -> Response {
    respond::<()>(Err(ApiError::unknown_route()), None)
}

pub fn router(bank: Arc<Bank>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/login", post(login))
        .route("/logout", post(logout))
        .route("/password", post(change_password))
        .route("/profile", get(get_profile).put(put_profile))
        .route("/atm", axum::routing::delete(cancel_atm))
        .route("/session/heartbeat", get(heartbeat))
        .route("/session/continue", post(session_continue))
        .route("/accounts", get(accounts))
        .route("/accounts/{id}/history", get(account_history))
        .route("/statements", post(statements))
        .route("/tac", post(issue_tac))
        .route("/beneficiaries", get(list_beneficiaries).post(save_beneficiary))
        .route("/beneficiaries/{id}", put(update_beneficiary).delete(delete_beneficiary))
        .route("/transfers", post(create_transfer))
        .route("/transfers/pending", get(pending_transfers))
        .route("/transfers/history", get(transfer_history))
        .route("/transfers/{id}/cancel", post(cancel_transfer))
        .route("/billers", get(list_billers).post(register_biller))
        .route("/billers/deregister", post(deregister_billers))
        .route("/payments/registered", post(pay_registered))
        .route("/payments/open", post(pay_open))
        .route("/payments/pending", get(pending_payments))
        .route("/payments/history", get(payment_history))
        .route("/payments/{id}/cancel", post(cancel_payment))
        .route("/payees/top-ten", get(top_ten))
        .route("/cheques/{no}", get(cheque_status))
        .route("/cheques/{no}/stop", post(stop_cheque))
        .route("/cheque-books", post(request_cheque_book))
        .route("/admin/customers", post(admin_add_customer))
        .route("/admin/customers/{id}/cancel", post(admin_cancel_customer))
        .route("/admin/credentials/{username}/reinitialize", post(admin_reinitialize))
        .route("/admin/cheques/present", post(admin_present_cheque))
        .route("/admin/cheque-books/{id}/dispatch", post(admin_dispatch_cheque_book))
        .route("/admin/run-value-date", post(admin_run_value_date))
        .route("/admin/transactions", get(admin_transactions))
        .fallback(unknown_route)
        .method_not_allowed_fallback(unknown_route)
        .with_state(AppState { bank })
}
