//! Minute-resolution UTC instants.

use std::fmt;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};

pub const MINUTES_PER_DAY: i64 = 1440;

/// Whole minutes since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Minute(pub i64);

impl Minute {
    /// Midnight (00:00 UTC) of `date`.
    pub fn start_of(date: NaiveDate) -> Self {
        let dt = date.and_hms_opt(0, 0, 0).expect("midnight exists");
        Minute(dt.and_utc().timestamp().div_euclid(60))
    }

    pub fn at(date: NaiveDate, hour: u32, minute: u32) -> Self {
        Minute(Self::start_of(date).0 + i64::from(hour) * 60 + i64::from(minute))
    }

    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        Minute(dt.timestamp().div_euclid(60))
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0 * 60, 0).expect("minute within chrono range")
    }

    pub fn date(self) -> NaiveDate {
        self.to_datetime().date_naive()
    }

    /// Minutes elapsed since midnight of the instant's own day, `0..1440`.
    pub fn minute_of_day(self) -> u32 {
        self.0.rem_euclid(MINUTES_PER_DAY) as u32
    }

    pub fn offset(self, minutes: i64) -> Self {
        Minute(self.0 + minutes)
    }

    /// Parses `YYYY-MM-DDTHH:MMZ`; a trailing `:00` seconds field is tolerated.
    pub fn parse_iso(text: &str) -> Option<Self> {
        let body = text.trim().strip_suffix('Z')?;
        let parsed = NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M")
            .or_else(|_| NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M:%S"))
            .ok()?;
        if parsed.second() != 0 || parsed.nanosecond() != 0 {
            return None;
        }
        Some(Self::from_datetime(parsed.and_utc()))
    }

    pub fn format_iso(self) -> String {
        self.to_datetime().format("%Y-%m-%dT%H:%MZ").to_string()
    }
}

impl fmt::Display for Minute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_iso())
    }
}

/// Half-open interval of minutes `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteSpan {
    pub start: Minute,
    pub end: Minute,
}

impl MinuteSpan {
    pub fn new(start: Minute, end: Minute) -> Self {
        Self { start, end }
    }

    /// Whole calendar days `first..=last`.
    pub fn days(first: NaiveDate, last: NaiveDate) -> Self {
        Self {
            start: Minute::start_of(first),
            end: Minute::start_of(last + Duration::days(1)),
        }
    }

    pub fn day(date: NaiveDate) -> Self {
        Self::days(date, date)
    }

    pub fn len(&self) -> i64 {
        (self.end.0 - self.start.0).max(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, m: Minute) -> bool {
        m >= self.start && m < self.end
    }
}
