//! Wall-clock abstraction so every time-dependent rule can run under a virtual clock.

use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

/// Milliseconds since the unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

const MILLIS_PER_DAY: i64 = 86_400_000;

impl Timestamp {
    pub fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    /// First millisecond of `date`.
    pub fn start_of(date: NaiveDate) -> Self {
        let dt = date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc();
        Timestamp(dt.timestamp_millis())
    }

    /// Last millisecond of `date`.
    pub fn end_of(date: NaiveDate) -> Self {
        Timestamp(Self::start_of(date).0 + MILLIS_PER_DAY - 1)
    }

    /// Business date (UTC) this instant falls on.
    pub fn date(self) -> NaiveDate {
        self.to_datetime().date_naive()
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp_millis(self.0).unwrap_or_default()
    }

    pub fn plus_secs(self, secs: i64) -> Self {
        Timestamp(self.0 + secs * 1000)
    }

    pub fn minus_days(self, days: i64) -> Self {
        Timestamp(self.0 - days * MILLIS_PER_DAY)
    }

    /// Whole seconds elapsed from `earlier` to `self` (floor).
    pub fn secs_since(self, earlier: Timestamp) -> i64 {
        (self.0 - earlier.0).div_euclid(1000)
    }
}

impl From<DateTime<Utc>> for Timestamp {
    fn from(dt: DateTime<Utc>) -> Self {
        Timestamp(dt.timestamp_millis())
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_datetime().format("%Y-%m-%dT%H:%M:%S%.3fZ"))
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;

    fn today(&self) -> NaiveDate {
        self.now().date()
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp(Utc::now().timestamp_millis())
    }
}

/// Virtual clock driven explicitly by tests and offline tooling.
#[derive(Debug, Clone)]
pub struct ManualClock {
    now: Arc<Mutex<Timestamp>>,
}

impl ManualClock {
    pub fn new(start: Timestamp) -> Self {
        ManualClock {
            now: Arc::new(Mutex::new(start)),
        }
    }

    pub fn starting_on(date: NaiveDate) -> Self {
        Self::new(Timestamp::start_of(date).plus_secs(9 * 3600))
    }

    pub fn set(&self, t: Timestamp) {
        *self.now.lock() = t;
    }

    pub fn advance_secs(&self, secs: i64) {
        let mut now = self.now.lock();
        *now = now.plus_secs(secs);
    }

    pub fn advance_days(&self, days: i64) {
        let mut now = self.now.lock();
        *now = Timestamp(now.0 + days * MILLIS_PER_DAY);
    }

    pub fn advance(&self, by: Duration) {
        let mut now = self.now.lock();
        *now = Timestamp(now.0 + by.num_milliseconds());
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        *self.now.lock()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_bounds() {
        let d = NaiveDate::from_ymd_opt(2024, 2, 29).unwrap();
        assert_eq!(Timestamp::start_of(d).date(), d);
        assert_eq!(Timestamp::end_of(d).date(), d);
        assert_eq!(Timestamp(Timestamp::end_of(d).0 + 1).date(), d.succ_opt().unwrap());
    }

    #[test]
    fn manual_clock_advances() {
        let clock = ManualClock::new(Timestamp(0));
        clock.advance_secs(61);
        assert_eq!(clock.now(), Timestamp(61_000));
        assert_eq!(clock.now().secs_since(Timestamp(0)), 61);
        clock.advance_days(1);
        assert_eq!(clock.today(), NaiveDate::from_ymd_opt(1970, 1, 2).unwrap());
    }
}
