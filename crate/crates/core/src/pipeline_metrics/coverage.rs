//! Yield: fraction of expected samples that were actually collected.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MinuteSpan, Modality, PatientRecord, SampleSeries};

/// `collected / expected` over `span`, where a period bucket counts as
/// collected if at least one sample falls in it.
pub fn compute_yield(series: &SampleSeries, span: MinuteSpan, sampling_period_minutes: u32) -> Result<f64> {
    if span.is_empty() {
        return Err(Error::domain("yield over an empty span"));
    }
    if sampling_period_minutes == 0 {
        return Err(Error::domain("sampling period must be positive"));
    }
    let period = i64::from(sampling_period_minutes);
    let expected = span.len() / period;
    if expected == 0 {
        return Err(Error::domain("span shorter than one sampling period"));
    }
    let mut last_bucket = None;
    let mut collected = 0i64;
    for s in series.window(span) {
        let bucket = (s.timestamp.0 - span.start.0) / period;
        if bucket < expected && last_bucket != Some(bucket) {
            collected += 1;
            last_bucket = Some(bucket);
        }
    }
    Ok((collected as f64 / expected as f64).clamp(0.0, 1.0))
}

/// Fraction of monitored days with at least one sleep summary.
pub fn compute_sleep_yield(record: &PatientRecord) -> f64 {
    let days = record.monitored_days();
    if days == 0 {
        return 0.0;
    }
    let with_sleep: BTreeSet<_> = record
        .sleep_summaries
        .iter()
        .map(|s| s.date)
        .filter(|d| *d >= record.monitoring_start && *d <= record.monitoring_end)
        .collect();
    with_sleep.len() as f64 / f64::from(days)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientYield {
    pub patient_id: String,
    pub heart_rate: f64,
    pub steps: f64,
    pub sleep: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for a single patient.
    pub std: f64,
    /// Fraction of patients with yield above 0.8.
    pub above_0_8: f64,
}

impl YieldSummary {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN, above_0_8: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let above = values.iter().filter(|&&v| v > 0.8).count() as f64 / n;
        Self { mean, std, above_0_8: above }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    pub per_patient: Vec<PatientYield>,
    pub heart_rate: YieldSummary,
    pub steps: YieldSummary,
    pub sleep: YieldSummary,
}

pub fn yield_report(records: &[PatientRecord]) -> Result<YieldReport> {
    let per_patient: Vec<PatientYield> = records
        .par_iter()
        .map(|r| {
            let span = r.monitoring_span();
            Ok(PatientYield {
                patient_id: r.patient_id.clone(),
                heart_rate: compute_yield(r.series(Modality::HeartRate), span, 1)?,
                steps: compute_yield(r.series(Modality::Step), span, 1)?,
                sleep: compute_sleep_yield(r),
            })
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&PatientYield) -> f64| per_patient.iter().map(f).collect::<Vec<_>>();
    Ok(YieldReport {
        heart_rate: YieldSummary::of(&col(|p| p.heart_rate)),
        steps: YieldSummary::of(&col(|p| p.steps)),
        sleep: YieldSummary::of(&col(|p| p.sleep)),
        per_patient,
    })
}
