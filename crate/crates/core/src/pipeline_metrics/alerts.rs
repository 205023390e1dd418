//! Daily compliance rules and the append-only alert log.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{BatteryLevel, Minute, MinuteSpan, PatientRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlertConfig {
    /// A day with fewer heart-rate samples than this raises an alert.
    pub min_daily_hr_samples: u64,
    /// A last-known battery level below this raises an alert.
    pub min_battery: BatteryLevel,
}

impl Default for AlertConfig {
    fn default() -> Self {
        Self { min_daily_hr_samples: 5400, min_battery: BatteryLevel::Medium }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum AlertReason {
    LowHeartRateCount { observed: u64 },
    LowBattery { observed: BatteryLevel },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceAlert {
    pub patient_id: String,
    pub date: NaiveDate,
    #[serde(flatten)]
    pub reason: AlertReason,
}

/// The two rules as a pure function of the day's heart-rate count and the last known battery.
pub fn evaluate_alert_rules(daily_hr_count: u64, battery: Option<BatteryLevel>, config: &AlertConfig) -> Vec<AlertReason> {
    let mut out = Vec::new();
    if daily_hr_count < config.min_daily_hr_samples {
        out.push(AlertReason::LowHeartRateCount { observed: daily_hr_count });
    }
    if let Some(level) = battery {
        if level < config.min_battery {
            out.push(AlertReason::LowBattery { observed: level });
        }
    }
    out
}

/// Battery reported by the latest sync that had arrived by the end of `date`.
pub fn last_known_battery(record: &PatientRecord, date: NaiveDate) -> Option<BatteryLevel> {
    let cutoff = Minute::start_of(date + Duration::days(1)).to_datetime();
    record
        .sync_events
        .iter()
        .filter(|e| e.arrival_time < cutoff)
        .max_by_key(|e| e.arrival_time)
        .map(|e| e.battery)
}

pub fn daily_hr_count(record: &PatientRecord, date: NaiveDate) -> u64 {
    record.heart_rate.window(MinuteSpan::day(date)).len() as u64
}

pub fn compliance_check(record: &PatientRecord, date: NaiveDate, config: &AlertConfig) -> Vec<ComplianceAlert> {
    evaluate_alert_rules(daily_hr_count(record, date), last_known_battery(record, date), config)
        .into_iter()
        .map(|reason| ComplianceAlert { patient_id: record.patient_id.clone(), date, reason })
        .collect()
}

/// JSON-lines sink; appends from concurrent workers are serialized.
pub struct AlertLog {
    writer: Mutex<BufWriter<File>>,
}

impl AlertLog {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { writer: Mutex::new(BufWriter::new(file)) })
    }

    pub fn append(&self, alerts: &[ComplianceAlert]) -> Result<()> {
        let mut w = self.writer.lock().expect("alert log lock poisoned");
        for a in alerts {
            serde_json::to_writer(&mut *w, a)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heart_rate_count_boundary() {
        let c = AlertConfig::default();
        assert_eq!(evaluate_alert_rules(5399, None, &c), vec![AlertReason::LowHeartRateCount { observed: 5399 }]);
        assert!(evaluate_alert_rules(5400, Some(BatteryLevel::Medium), &c).is_empty());
    }

    #[test]
    fn low_battery_regardless_of_count() {
        let c = AlertConfig::default();
        assert_eq!(
            evaluate_alert_rules(10_000, Some(BatteryLevel::Low), &c),
            vec![AlertReason::LowBattery { observed: BatteryLevel::Low }]
        );
        assert_eq!(evaluate_alert_rules(0, Some(BatteryLevel::Empty), &c).len(), 2);
        assert!(evaluate_alert_rules(6000, Some(BatteryLevel::High), &c).is_empty());
    }

    #[test]
    fn log_appends_json_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("alerts.jsonl");
        let alert = ComplianceAlert {
            patient_id: "P001".into(),
            date: NaiveDate::from_ymd_opt(2017, 1, 3).unwrap(),
            reason: AlertReason::LowBattery { observed: BatteryLevel::Low },
        };
        AlertLog::open(&path).unwrap().append(std::slice::from_ref(&alert)).unwrap();
        AlertLog::open(&path).unwrap().append(std::slice::from_ref(&alert)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], r#"{"patient_id":"P001","date":"2017-01-03","reason":"low_battery","observed":"low"}"#);
        let back: ComplianceAlert = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back, alert);
    }
}
