//! Patient-level labels and the LACE reference row.

use serde::{Deserialize, Serialize};

use super::aggregate::AveragedMetrics;
use super::metrics::MetricsReport;
use crate::error::Result;
use crate::ingest::PatientRecord;
use crate::models::lace::{lace_classify, lace_score};

pub fn risk_labels(records: &[PatientRecord]) -> Vec<bool> {
    records.iter().map(|r| r.outcome.deteriorated()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaceBaseline {
    pub threshold: u32,
    pub scores: Vec<u32>,
    pub report: MetricsReport,
}

impl LaceBaseline {
    /// The score involves no training, so every repeat gives the same report.
    pub fn averaged(&self, repeats: usize) -> AveragedMetrics {
        AveragedMetrics::from_reports(&vec![self.report.clone(); repeats.max(1)])
    }
}

/// `None` (with a warning) when any patient lacks LACE inputs.
pub fn lace_baseline(records: &[PatientRecord], threshold: u32) -> Result<Option<LaceBaseline>> {
    let Some(inputs) = records.iter().map(|r| r.lace).collect::<Option<Vec<_>>>() else {
        log::warn!("LACE inputs missing for some patients; LACE row omitted");
        return Ok(None);
    };
    let scores: Vec<u32> = inputs.iter().map(lace_score).collect();
    let predicted: Vec<bool> = scores.iter().map(|&s| lace_classify(s, threshold)).collect();
    let as_f64: Vec<f64> = scores.iter().map(|&s| f64::from(s)).collect();
    let report = MetricsReport::evaluate(&risk_labels(records), &predicted, &as_f64)?;
    Ok(Some(LaceBaseline { threshold, scores, report }))
}

