use thiserror::Error;

/// Login failure text shown to customers, byte-exact.
pub const INVALID_CREDENTIALS_MESSAGE: &str = "Alert Invalid Username and Password";

pub type Result<T, E = BankError> = std::result::Result<T, E>;

/// Every failure the banking core can report. `code()` is the stable wire identifier.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BankError {
    // ledger
    #[error("postings do not sum to zero")]
    Unbalanced,
    #[error("insufficient funds in account {0}")]
    InsufficientFunds(String),
    #[error("account {0} is closed")]
    AccountClosed(String),
    #[error("currency mismatch: {left} vs {right}")]
    CurrencyMismatch { left: String, right: String },
    #[error("credit card {0} would exceed its credit limit or be overpaid")]
    OverLimit(String),
    #[error("unknown account {0}")]
    UnknownAccount(String),
    #[error("invalid date range: from is after to")]
    InvalidRange,
    #[error("invalid statement channel {0}")]
    InvalidChannel(String),
    #[error("invalid ledger entry: {0}")]
    InvalidEntry(String),
    #[error("invalid currency code {0:?}")]
    InvalidCurrency(String),
    #[error("amount overflow")]
    AmountOverflow,

    // identity & session
    #[error("{}", INVALID_CREDENTIALS_MESSAGE)]
    InvalidCredentials,
    #[error("Your access has been locked after too many failed log-on attempts. Please contact the Bank to be re-initialized.")]
    Locked,
    #[error("this customer has been cancelled")]
    CustomerCancelled,
    #[error("Your session has timed out. Please log on again.")]
    SessionExpired,
    #[error("authentication required")]
    Unauthenticated,
    #[error("IC/Passport number does not match our records")]
    IcMismatch,
    #[error("password policy violation: {}", .0.join(", "))]
    PolicyViolation(Vec<String>),
    #[error("field {0} cannot be changed")]
    InvalidField(String),
    #[error("ATM facilities already cancelled")]
    AlreadyCancelled,
    #[error("administrator privileges required")]
    NotAdmin,
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("username {0} is already taken")]
    DuplicateUsername(String),
    #[error("unknown customer {0}")]
    UnknownCustomer(String),
    #[error("you must change your password before continuing")]
    PasswordChangeRequired,
    #[error("this operation is only available to customers")]
    NotCustomer,
    #[error("{0} is required")]
    MissingField(String),

    // payments
    #[error("invalid or expired TAC")]
    InvalidTac,
    #[error("a maximum of 10 accounts may be saved")]
    LimitExceeded,
    #[error("account {0} is already saved")]
    DuplicateBeneficiary(String),
    #[error("unknown beneficiary {0}")]
    UnknownBeneficiary(String),
    #[error("source and target are the same account")]
    SameAccount,
    #[error("amount must be positive")]
    NonPositiveAmount,
    #[error("effective date is in the past")]
    PastDate,
    #[error("account {0} does not belong to you")]
    NotOwner(String),
    #[error("instruction is not pending")]
    NotPending,
    #[error("unknown transfer {0}")]
    UnknownTransfer(u64),
    #[error("unknown registration {0}")]
    UnknownRegistration(u64),
    #[error("biller is already registered")]
    DuplicateRegistration,
    #[error("unknown payment {0}")]
    UnknownPayment(u64),
    #[error("business date {requested} precedes last processed date {last}")]
    DateRegression { requested: String, last: String },

    // cheques
    #[error("unknown cheque {0}")]
    UnknownCheque(String),
    #[error("cheque already paid")]
    AlreadyPaid,
    #[error("cheque is already stopped or returned")]
    AlreadyTerminal,
    #[error("cheque books are only available for current accounts")]
    NotCurrentAccount,
    #[error("cheque books come with 25 or 50 leaves, not {0}")]
    InvalidLeaves(u32),
    #[error("cheque has been stopped")]
    ChequeStopped,
    #[error("unknown cheque book request {0}")]
    UnknownChequeBook(u64),

    // persistence
    #[error("storage failure: {0}")]
    StorageFailure(String),
    #[error("incremental snapshot requires a prior snapshot")]
    NoBase,
    #[error("corrupt journal: {0}")]
    CorruptJournal(String),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("backup target not writable: {0}")]
    TargetUnwritable(String),
    #[error("off-site copy failed verification: {0}")]
    VerifyFailed(String),

    // plumbing
    #[error("no strategy named {name:?} registered for {kind}")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl BankError {
    pub fn code(&self) -> &'static str {
        use BankError::*;
        match self {
            Unbalanced => "UNBALANCED",
            InsufficientFunds(_) => "INSUFFICIENT_FUNDS",
            AccountClosed(_) => "ACCOUNT_CLOSED",
            CurrencyMismatch { .. } => "CURRENCY_MISMATCH",
            OverLimit(_) => "OVER_LIMIT",
            UnknownAccount(_) => "UNKNOWN_ACCOUNT",
            InvalidRange => "INVALID_RANGE",
            InvalidChannel(_) => "INVALID_CHANNEL",
            InvalidEntry(_) => "INVALID_ENTRY",
            InvalidCurrency(_) => "INVALID_CURRENCY",
            AmountOverflow => "AMOUNT_OVERFLOW",
            InvalidCredentials => "INVALID_CREDENTIALS",
            Locked => "LOCKED",
            CustomerCancelled => "CUSTOMER_CANCELLED",
            SessionExpired => "SESSION_EXPIRED",
            Unauthenticated => "UNAUTHENTICATED",
            IcMismatch => "IC_MISMATCH",
            PolicyViolation(_) => "POLICY_VIOLATION",
            InvalidField(_) => "INVALID_FIELD",
            AlreadyCancelled => "ALREADY_CANCELLED",
            NotAdmin => "NOT_ADMIN",
            UnknownUser(_) => "UNKNOWN_USER",
            DuplicateUsername(_) => "DUPLICATE_USERNAME",
            UnknownCustomer(_) => "UNKNOWN_CUSTOMER",
            PasswordChangeRequired => "PASSWORD_CHANGE_REQUIRED",
            NotCustomer => "NOT_CUSTOMER",
            MissingField(_) => "MISSING_FIELD",
            InvalidTac => "INVALID_TAC",
            LimitExceeded => "LIMIT_EXCEEDED",
            DuplicateBeneficiary(_) => "DUPLICATE_BENEFICIARY",
            UnknownBeneficiary(_) => "UNKNOWN_BENEFICIARY",
            SameAccount => "SAME_ACCOUNT",
            NonPositiveAmount => "NON_POSITIVE_AMOUNT",
            PastDate => "PAST_DATE",
            NotOwner(_) => "NOT_OWNER",
            NotPending => "NOT_PENDING",
            UnknownTransfer(_) => "UNKNOWN_TRANSFER",
            UnknownRegistration(_) => "UNKNOWN_REGISTRATION",
            DuplicateRegistration => "DUPLICATE_REGISTRATION",
            UnknownPayment(_) => "UNKNOWN_PAYMENT",
            DateRegression { .. } => "DATE_REGRESSION",
            UnknownCheque(_) => "UNKNOWN_CHEQUE",
            AlreadyPaid => "ALREADY_PAID",
            AlreadyTerminal => "ALREADY_TERMINAL",
            NotCurrentAccount => "NOT_CURRENT_ACCOUNT",
            InvalidLeaves(_) => "INVALID_LEAVES",
            ChequeStopped => "CHEQUE_STOPPED",
            UnknownChequeBook(_) => "UNKNOWN_CHEQUE_BOOK",
            StorageFailure(_) => "STORAGE_FAILURE",
            NoBase => "NO_BASE",
            CorruptJournal(_) => "CORRUPT_JOURNAL",
            CorruptSnapshot(_) => "CORRUPT_SNAPSHOT",
            TargetUnwritable(_) => "TARGET_UNWRITABLE",
            VerifyFailed(_) => "VERIFY_FAILED",
            UnknownStrategy { .. } => "UNKNOWN_STRATEGY",
            InvalidConfig(_) => "INVALID_CONFIG",
        }
    }

    pub(crate) fn storage(err: impl std::fmt::Display) -> Self {
        BankError::StorageFailure(err.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_credentials_text_is_exact() {
        assert_eq!(
            BankError::InvalidCredentials.to_string(),
            "Alert Invalid Username and Password"
        );
    }

    #[test]
    fn lock_message_points_to_the_bank() {
        assert!(BankError::Locked.to_string().contains("contact the Bank"));
    }
}
