//! Gap analysis: time-to-failure (complete runs) and time-to-recovery (gaps).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cdf::{median_sorted, nearest_rank};
use crate::error::{Error, Result};
use crate::ingest::{Minute, MinuteSpan, Modality, PatientRecord, SampleSeries, MINUTES_PER_DAY};

/// Maximal run of missing minutes `[gap_start, gap_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapEvent {
    pub modality: Modality,
    pub gap_start: Minute,
    pub gap_end: Minute,
    pub duration: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapAnalysis {
    pub gaps: Vec<GapEvent>,
    /// Durations (minutes) of maximal complete runs, in time order.
    pub time_to_failure: Vec<i64>,
    /// Durations (minutes) of maximal gaps, in time order.
    pub time_to_recovery: Vec<i64>,
    pub span_minutes: i64,
}

impl GapAnalysis {
    pub fn failures_per_day(&self) -> f64 {
        self.gaps.len() as f64 / (self.span_minutes as f64 / MINUTES_PER_DAY as f64)
    }
}

/// Partitions `span` into alternating complete runs and gaps. Gaps touching the
/// span boundaries are counted.
pub fn gap_analysis(series: &SampleSeries, span: MinuteSpan) -> Result<GapAnalysis> {
    if span.is_empty() {
        return Err(Error::domain("gap analysis over an empty span"));
    }
    let present: Vec<bool> = series.dense(span).into_iter().map(|v| v.is_some()).collect();
    let mut gaps = Vec::new();
    let mut ttf = Vec::new();
    let mut ttr = Vec::new();
    let mut run_start = 0usize;
    for i in 1..=present.len() {
        if i == present.len() || present[i] != present[run_start] {
            let len = (i - run_start) as i64;
            if present[run_start] {
                ttf.push(len);
            } else {
                ttr.push(len);
                gaps.push(GapEvent {
                    modality: series.modality(),
                    gap_start: span.start.offset(run_start as i64),
                    gap_end: span.start.offset(i as i64),
                    duration: len,
                });
            }
            run_start = i;
        }
    }
    Ok(GapAnalysis { gaps, time_to_failure: ttf, time_to_recovery: ttr, span_minutes: span.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub modality: Modality,
    pub time_to_failure: Vec<i64>,
    pub time_to_recovery: Vec<i64>,
    pub median_ttf: f64,
    pub median_ttr: f64,
    pub p95_ttf: f64,
    pub p95_ttr: f64,
    pub failures_per_patient_day: f64,
    pub gap_count: usize,
}

/// Cohort-level reliability for one modality; patient results merge in input order.
pub fn reliability_report(records: &[PatientRecord], modality: Modality) -> Result<ReliabilityReport> {
    let analyses: Vec<GapAnalysis> = records
        .par_iter()
        .map(|r| gap_analysis(r.series(modality), r.monitoring_span()))
        .collect::<Result<_>>()?;
    let mut ttf: Vec<i64> = analyses.iter().flat_map(|a| a.time_to_failure.iter().copied()).collect();
    let mut ttr: Vec<i64> = analyses.iter().flat_map(|a| a.time_to_recovery.iter().copied()).collect();
    let gap_count: usize = analyses.iter().map(|a| a.gaps.len()).sum();
    let days: f64 = analyses.iter().map(|a| a.span_minutes as f64 / MINUTES_PER_DAY as f64).sum();
    let sorted = |v: &mut Vec<i64>| {
        let mut s: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        s.sort_by(f64::total_cmp);
        s
    };
    let ttf_sorted = sorted(&mut ttf);
    let ttr_sorted = sorted(&mut ttr);
    Ok(ReliabilityReport {
        modality,
        median_ttf: median_sorted(&ttf_sorted),
        median_ttr: median_sorted(&ttr_sorted),
        p95_ttf: nearest_rank(&ttf_sorted, 95.0),
        p95_ttr: nearest_rank(&ttr_sorted, 95.0),
        failures_per_patient_day: if days > 0.0 { gap_count as f64 / days } else { f64::NAN },
        gap_count,
        time_to_failure: ttf,
        time_to_recovery: ttr,
    })
}
