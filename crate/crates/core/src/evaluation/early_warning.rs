//! Sliding-window early-warning dataset, 95/5 anomaly splits and repeated evaluation.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::AveragedMetrics;
use super::metrics::MetricsReport;
use super::prep::{prepare_split, repeat_rng};
use crate::error::{Error, Result};
use crate::features::{assemble_daily_features, FeatureCatalog, FeatureConfig, FeatureMatrix, FeatureVector};
use crate::ingest::{Modality, MinuteSpan, PatientRecord};
use crate::models::{
    calibrate_threshold, train_ocsvm, train_weighted_ocsvm, KMeansModel, KernelChoice, LofModel, OcSvmConfig,
    WeightedOcSvmConfig,
};

pub const TEST_NORMAL_FRACTION: f64 = 0.05;
pub const MIN_NORMALS: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Positive iff an event falls exactly `h` days after the window end.
    #[default]
    Exact,
    /// Positive iff an event falls within `(end, end + h]`.
    Within,
}

pub fn window_label(end: NaiveDate, h: u32, dates: &[NaiveDate], mode: LabelMode) -> bool {
    let target = end + Duration::days(i64::from(h));
    match mode {
        LabelMode::Exact => dates.contains(&target),
        LabelMode::Within => dates.iter().any(|&d| d > end && d <= target),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowExample {
    pub patient_id: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyWarningDataset {
    pub window_days: u32,
    pub horizon_days: u32,
    pub mode: LabelMode,
    pub examples: Vec<WindowExample>,
    pub features: FeatureMatrix,
}

impl EarlyWarningDataset {
    pub fn labels(&self) -> Vec<bool> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.label).count()
    }

    /// The same windows and features labelled for horizon `h`.
    pub fn relabel(&self, h: u32, records: &[PatientRecord]) -> Result<Self> {
        if h == 0 {
            return Err(Error::config("horizon must be at least one day"));
        }
        let dates: BTreeMap<&str, &[NaiveDate]> =
            records.iter().map(|r| (r.patient_id.as_str(), r.outcome.deterioration_dates.as_slice())).collect();
        let examples = self
            .examples
            .iter()
            .map(|e| {
                let d = dates
                    .get(e.patient_id.as_str())
                    .ok_or_else(|| Error::Cohort(format!("no record for patient `{}`", e.patient_id)))?;
                Ok(WindowExample { label: window_label(e.end, h, d, self.mode), ..e.clone() })
            })
            .collect::<Result<_>>()?;
        Ok(Self { horizon_days: h, examples, ..self.clone() })
    }
}

fn day_has_data(record: &PatientRecord, date: NaiveDate) -> bool {
    let span = MinuteSpan::day(date);
    Modality::ALL.iter().any(|&m| !record.series(m).window(span).is_empty())
}

fn patient_windows(record: &PatientRecord, w: u32, h: u32, mode: LabelMode, config: &FeatureConfig) -> Result<Vec<(WindowExample, FeatureVector)>> {
    let days = record.monitored_days();
    let present: Vec<bool> = (0..days).map(|i| day_has_data(record, record.day(i))).collect();
    let mut out = Vec::new();
    for end_idx in (w - 1)..days {
        let start_idx = end_idx + 1 - w;
        if !present[start_idx as usize..=end_idx as usize].iter().all(|&p| p) {
            continue;
        }
        let (start, end) = (record.day(start_idx), record.day(end_idx));
        let mut fv = assemble_daily_features(record, start, end, config)?;
        fv.example_id = format!("{}:{end}", record.patient_id);
        let label = window_label(end, h, &record.outcome.deterioration_dates, mode);
        out.push((WindowExample { patient_id: record.patient_id.clone(), start, end, label }, fv));
    }
    Ok(out)
}

/// One example per (patient, window end) with windows sliding by a day; windows
/// touching a day without any data are skipped.
pub fn build_early_warning_dataset(
    records: &[PatientRecord],
    w: u32,
    h: u32,
    mode: LabelMode,
    config: &FeatureConfig,
) -> Result<EarlyWarningDataset> {
    if w == 0 || h == 0 {
        return Err(Error::config("window and horizon must be at least one day"));
    }
    if records.is_empty() {
        return Err(Error::domain("empty cohort"));
    }
    let per_patient: Vec<Vec<(WindowExample, FeatureVector)>> = records
        .par_iter()
        .map(|r| patient_windows(r, w, h, mode, config))
        .collect::<Result<_>>()?;
    let (examples, vectors): (Vec<_>, Vec<_>) = per_patient.into_iter().flatten().unzip();
    let features = FeatureMatrix::from_vectors(&FeatureCatalog::standard(), &vectors)?;
    Ok(EarlyWarningDataset { window_days: w, horizon_days: h, mode, examples, features })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Normal examples only.
    pub train: Vec<usize>,
    /// Held-out normals followed by every anomaly.
    pub test: Vec<usize>,
    pub seed: u64,
    pub repeat: u64,
}

/// 95% of normals train; the other 5% and every anomaly test.
pub fn anomaly_split(labels: &[bool], seed: u64, repeat: u64) -> Result<SplitPlan> {
    let mut normals: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let anomalies: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    if anomalies.is_empty() {
        return Err(Error::domain("no anomaly examples to evaluate on"));
    }
    if normals.len() < MIN_NORMALS {
        return Err(Error::domain(format!("{} normal examples; at least {MIN_NORMALS} needed", normals.len())));
    }
    normals.shuffle(&mut repeat_rng(seed, repeat));
    let n_test = ((normals.len() as f64 * TEST_NORMAL_FRACTION).round() as usize).max(1);
    let mut test = normals[..n_test].to_vec();
    let mut train = normals[n_test..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    test.extend(anomalies);
    Ok(SplitPlan { train, test, seed, repeat })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AnomalyModelSpec {
    WeightedOcSvm { nu: f64, beta: f64 },
    OcSvm { nu: f64 },
    Lof { neighbors: usize, contamination: f64 },
    #[serde(rename = "kmeans")]
    KMeans { clusters: usize, contamination: f64 },
}

impl AnomalyModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AnomalyModelSpec::WeightedOcSvm { .. } => "weighted_ocsvm",
            AnomalyModelSpec::OcSvm { .. } => "ocsvm",
            AnomalyModelSpec::Lof { .. } => "lof",
            AnomalyModelSpec::KMeans { .. } => "kmeans",
        }
    }

    /// The four detectors compared in the early-warning table.
    pub fn standard_set() -> Vec<Self> {
        vec![
            AnomalyModelSpec::WeightedOcSvm { nu: 0.09, beta: 0.95 },
            AnomalyModelSpec::OcSvm { nu: 0.09 },
            AnomalyModelSpec::Lof { neighbors: 10, contamination: 0.09 },
            AnomalyModelSpec::KMeans { clusters: 3, contamination: 0.09 },
        ]
    }

    /// Anomaly scores (higher = more anomalous) and labels for `test`.
    pub fn fit_score(&self, train: &Array2<f64>, test: &Array2<f64>, seed: u64) -> Result<(Vec<f64>, Vec<bool>)> {
        let ocsvm = |nu: f64| OcSvmConfig { nu, kernel: KernelChoice::default(), standardize: true };
        match *self {
            AnomalyModelSpec::WeightedOcSvm { nu, beta } => {
                let m = train_weighted_ocsvm(train.view(), &WeightedOcSvmConfig { base: ocsvm(nu), beta, ..Default::default() })?;
                let d = m.model.decision_batch(test.view())?;
                Ok((d.iter().map(|v| -v).collect(), d.iter().map(|&v| v < 0.0).collect()))
            }
            AnomalyModelSpec::OcSvm { nu } => {
                let m = train_ocsvm(train.view(), &ocsvm(nu))?;
                let d = m.decision_batch(test.view())?;
                Ok((d.iter().map(|v| -v).collect(), d.iter().map(|&v| v < 0.0).collect()))
            }
            AnomalyModelSpec::Lof { neighbors, contamination } => {
                let m = LofModel::fit(train.view(), neighbors.min(train.nrows() - 1), true)?;
                let threshold = calibrate_threshold(&m.training_scores(), contamination)?;
                let s: Vec<f64> = test.rows().into_iter().map(|r| m.score(r)).collect::<Result<_>>()?;
                let labels = s.iter().map(|&v| v > threshold).collect();
                Ok((s, labels))
            }
            AnomalyModelSpec::KMeans { clusters, contamination } => {
                let m = KMeansModel::fit(train.view(), clusters, seed, crate::models::kmeans::DEFAULT_RESTARTS, true)?;
                let threshold = calibrate_threshold(&m.score_batch(train.view())?, contamination)?;
                let s = m.score_batch(test.view())?;
                let labels = s.iter().map(|&v| v > threshold).collect();
                Ok((s, labels))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvalResult {
    pub model: AnomalyModelSpec,
    pub per_repeat: Vec<MetricsReport>,
    pub averaged: AveragedMetrics,
}

/// Trains on the normal part of one split and evaluates on its mixed test set.
pub fn evaluate_anomaly_split(matrix: &FeatureMatrix, labels: &[bool], plan: &SplitPlan, spec: &AnomalyModelSpec) -> Result<MetricsReport> {
    let (x_train, x_test, _) = prepare_split(matrix, &plan.train, &plan.test)?;
    let model_seed: u64 = repeat_rng(plan.seed ^ 0x5eed, plan.repeat).random();
    let (scores, predicted) = spec.fit_score(&x_train, &x_test, model_seed)?;
    let truth: Vec<bool> = plan.test.iter().map(|&i| labels[i]).collect();
    MetricsReport::evaluate(&truth, &predicted, &scores)
}

/// `repeats` independent 95/5 splits, evaluated in parallel and merged in repeat order.
pub fn repeat_anomaly_eval(
    matrix: &FeatureMatrix,
    labels: &[bool],
    spec: &AnomalyModelSpec,
    repeats: usize,
    seed: u64,
) -> Result<AnomalyEvalResult> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch { expected: matrix.n_rows(), found: labels.len() });
    }
    let per_repeat: Vec<MetricsReport> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| evaluate_anomaly_split(matrix, labels, &anomaly_split(labels, seed, r)?, spec))
        .collect::<Result<_>>()?;
    let averaged = AveragedMetrics::from_reports(&per_repeat);
    Ok(AnomalyEvalResult { model: *spec, per_repeat, averaged })
}
