//! Canonical cohort data model.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::time::{Minute, MinuteSpan};
use crate::error::{Error, Result};
use crate::models::lace::LaceInputs;

/// Sensor stream carried by a [`SampleSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    HeartRate,
    Step,
    SleepStatus,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::HeartRate, Modality::Step, Modality::SleepStatus];

    /// Name used in `<patient_id>.<modality>.csv` file names.
    pub fn file_stem(self) -> &'static str {
        match self {
            Modality::HeartRate => "heart_rate",
            Modality::Step => "steps",
            Modality::SleepStatus => "sleep_status",
        }
    }

    /// Checks a value against the modality's domain. `Err` carries the reason.
    pub fn check_value(self, value: f64) -> std::result::Result<(), String> {
        if !value.is_finite() {
            return Err(format!("non-finite value {value}"));
        }
        match self {
            Modality::HeartRate if value <= 20.0 || value >= 250.0 => {
                Err(format!("heart rate {value} bpm outside (20, 250)"))
            }
            Modality::Step if value < 0.0 || value.fract() != 0.0 => {
                Err(format!("step count {value} is not a non-negative integer"))
            }
            Modality::SleepStatus if !matches!(value as i64, 0..=3) || value.fract() != 0.0 => {
                Err(format!("sleep level {value} not in {{0,1,2,3}}"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heart_rate" | "hr" => Ok(Modality::HeartRate),
            "steps" | "step" => Ok(Modality::Step),
            "sleep_status" | "sleep" => Ok(Modality::SleepStatus),
            other => Err(Error::domain(format!("unknown modality `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedSample {
    pub timestamp: Minute,
    pub value: f64,
}

impl TimedSample {
    pub fn new(timestamp: Minute, value: f64) -> Self {
        Self { timestamp, value }
    }
}

/// Time-ordered per-minute stream for one modality.
///
/// Timestamps are strictly increasing. Missing minutes are simply absent;
/// nothing is zero-filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    modality: Modality,
    samples: Vec<TimedSample>,
}

impl SampleSeries {
    pub fn empty(modality: Modality) -> Self {
        Self { modality, samples: Vec::new() }
    }

    /// Validates ordering and value domain.
    pub fn new(modality: Modality, samples: Vec<TimedSample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            modality
                .check_value(s.value)
                .map_err(|msg| Error::domain(format!("sample {i}: {msg}")))?;
            if i > 0 && s.timestamp <= samples[i - 1].timestamp {
                return Err(Error::Ordering { line: i as u64, timestamp: s.timestamp.to_string() });
            }
        }
        Ok(Self { modality, samples })
    }

    /// Builds a series from rows in any order, sorting by timestamp.
    pub fn from_unordered(modality: Modality, mut samples: Vec<TimedSample>) -> Result<Self> {
        samples.sort_by_key(|s| s.timestamp);
        Self::new(modality, samples)
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn samples(&self) -> &[TimedSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples whose timestamp lies in `span`.
    pub fn window(&self, span: MinuteSpan) -> &[TimedSample] {
        let lo = self.samples.partition_point(|s| s.timestamp < span.start);
        let hi = self.samples.partition_point(|s| s.timestamp < span.end);
        &self.samples[lo..hi.max(lo)]
    }

    pub fn values_in(&self, span: MinuteSpan) -> Vec<f64> {
        self.window(span).iter().map(|s| s.value).collect()
    }

    /// Dense per-minute view of `span`: `None` where no sample exists.
    pub fn dense(&self, span: MinuteSpan) -> Vec<Option<f64>> {
        let mut out = vec![None; span.len() as usize];
        for s in self.window(span) {
            out[(s.timestamp.0 - span.start.0) as usize] = Some(s.value);
        }
        out
    }
}

/// One device-reported sleep episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SleepEpisodeSummary {
    pub date: NaiveDate,
    pub time_in_bed: u32,
    pub min_to_fall_asleep: u32,
    pub min_asleep: u32,
    pub min_awake: u32,
    pub min_after_wakeup: u32,
    pub awake_count: u32,
    pub restless_count: u32,
    pub restless_duration: u32,
}

impl SleepEpisodeSummary {
    /// Time in bed must equal the sum of its four components.
    pub fn validate(&self) -> Result<()> {
        let parts = self.min_to_fall_asleep + self.min_asleep + self.min_awake + self.min_after_wakeup;
        if parts != self.time_in_bed {
            return Err(Error::domain(format!(
                "sleep episode {}: time_in_bed {} != component sum {parts}",
                self.date, self.time_in_bed
            )));
        }
        Ok(())
    }
}

/// Ordered battery state reported at sync time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatteryLevel {
    Empty,
    Low,
    Medium,
    High,
}

impl BatteryLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            BatteryLevel::Empty => "empty",
            BatteryLevel::Low => "low",
            BatteryLevel::Medium => "medium",
            BatteryLevel::High => "high",
        }
    }
}

impl FromStr for BatteryLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "empty" => Ok(BatteryLevel::Empty),
            "low" => Ok(BatteryLevel::Low),
            "medium" => Ok(BatteryLevel::Medium),
            "high" => Ok(BatteryLevel::High),
            other => Err(Error::domain(format!("unknown battery level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncEvent {
    pub capture_time: DateTime<Utc>,
    pub arrival_time: DateTime<Utc>,
    pub battery: BatteryLevel,
}

impl SyncEvent {
    pub fn new(capture_time: DateTime<Utc>, arrival_time: DateTime<Utc>, battery: BatteryLevel) -> Result<Self> {
        if arrival_time < capture_time {
            return Err(Error::domain(format!(
                "sync event arrives ({arrival_time}) before capture ({capture_time})"
            )));
        }
        Ok(Self { capture_time, arrival_time, battery })
    }

    pub fn latency_minutes(&self) -> f64 {
        (self.arrival_time - self.capture_time).num_milliseconds() as f64 / 60_000.0
    }
}

/// Deterioration outcome within the 60-day horizon.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeLabel {
    pub deterioration_dates: Vec<NaiveDate>,
}

impl OutcomeLabel {
    pub const HORIZON_DAYS: i64 = 60;

    pub fn new(mut dates: Vec<NaiveDate>) -> Self {
        dates.sort();
        dates.dedup();
        Self { deterioration_dates: dates }
    }

    pub fn deteriorated(&self) -> bool {
        !self.deterioration_dates.is_empty()
    }
}

/// Everything known about one monitored patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub heart_rate: SampleSeries,
    pub steps: SampleSeries,
    pub sleep_status: SampleSeries,
    pub sleep_summaries: Vec<SleepEpisodeSummary>,
    pub sync_events: Vec<SyncEvent>,
    pub monitoring_start: NaiveDate,
    /// Last monitored day, inclusive.
    pub monitoring_end: NaiveDate,
    pub outcome: OutcomeLabel,
    pub lace: Option<LaceInputs>,
}

impl PatientRecord {
    pub fn monitoring_span(&self) -> MinuteSpan {
        MinuteSpan::days(self.monitoring_start, self.monitoring_end)
    }

    pub fn monitored_days(&self) -> u32 {
        ((self.monitoring_end - self.monitoring_start).num_days() + 1).max(0) as u32
    }

    /// Calendar date of monitoring day `index` (0-based).
    pub fn day(&self, index: u32) -> NaiveDate {
        self.monitoring_start + Duration::days(i64::from(index))
    }

    pub fn series(&self, modality: Modality) -> &SampleSeries {
        match modality {
            Modality::HeartRate => &self.heart_rate,
            Modality::Step => &self.steps,
            Modality::SleepStatus => &self.sleep_status,
        }
    }

    /// Checks span containment, series modality tags and outcome dates.
    pub fn validate(&self) -> Result<()> {
        if self.monitoring_end < self.monitoring_start {
            return Err(Error::Cohort(format!("{}: monitoring ends before it starts", self.patient_id)));
        }
        let span = self.monitoring_span();
        for modality in Modality::ALL {
            let series = self.series(modality);
            if series.modality() != modality {
                return Err(Error::Cohort(format!(
                    "{}: {} slot holds a {} series",
                    self.patient_id,
                    modality,
                    series.modality()
                )));
            }
            if let (Some(first), Some(last)) = (series.samples().first(), series.samples().last()) {
                if !span.contains(first.timestamp) || !span.contains(last.timestamp) {
                    return Err(Error::Cohort(format!(
                        "{}: {} samples fall outside monitoring span",
                        self.patient_id, modality
                    )));
                }
            }
        }
        for s in &self.sleep_summaries {
            s.validate()?;
        }
        let horizon_end = self.monitoring_start + Duration::days(OutcomeLabel::HORIZON_DAYS);
        for d in &self.outcome.deterioration_dates {
            if *d < self.monitoring_start || *d >= horizon_end {
                return Err(Error::Cohort(format!(
                    "{}: deterioration date {d} outside the {}-day horizon",
                    self.patient_id,
                    OutcomeLabel::HORIZON_DAYS
                )));
            }
        }
        Ok(())
    }
}
