//! Repeated stratified k-fold cross-validation for the risk-prediction task.

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{AveragedMetrics, MeanStd};
use super::metrics::{best_accuracy_operating_point, fixed_sensitivity_operating_point, MetricsReport};
use super::prep::{prepare_split, repeat_rng, FoldPrep};
use super::sfs::{sfs_knn, sfs_logistic};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{train_logistic, KnnModel, LogisticConfig, Standardizer, DEFAULT_K};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_REPEATS: usize = 100;
pub const DEFAULT_TARGET_SENSITIVITY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Knn { k: usize, feature_selection: bool },
    Logistic { lambda: f64, feature_selection: bool },
    /// Predicts the training fold's majority class.
    Majority,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::Knn { k: DEFAULT_K, feature_selection: true }
    }
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::Logistic { .. } => "logistic",
            ClassifierSpec::Majority => "majority",
        }
    }

    fn uses_selection(&self) -> bool {
        matches!(
            self,
            ClassifierSpec::Knn { feature_selection: true, .. } | ClassifierSpec::Logistic { feature_selection: true, .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub target_sensitivity: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: DEFAULT_FOLDS, repeats: DEFAULT_REPEATS, seed: 0, target_sensitivity: DEFAULT_TARGET_SENSITIVITY }
    }
}

/// Everything fitted on one training fold, kept for isolation checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    pub prep: FoldPrep,
    pub scaler: Standardizer<f64>,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub model: ClassifierSpec,
    /// Pooled out-of-fold predictions of each repeat at the model's own decision rule.
    pub per_repeat: Vec<MetricsReport>,
    pub averaged: AveragedMetrics,
    /// Pooled scores thresholded at the requested sensitivity.
    pub fixed_sensitivity: AveragedMetrics,
    /// Accuracy at the best pooled threshold of each repeat.
    pub best_threshold_accuracy: MeanStd,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<FoldRecord>,
}

/// Deals shuffled positives, then shuffled negatives, round-robin across `k` folds.
///
/// With fewer positives than folds the labels are ignored and plain folds are dealt.
pub fn stratified_folds<R: Rng>(labels: &[bool], k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 || n < k {
        return Err(Error::config(format!("{k}-fold cross-validation needs at least {k} examples and k >= 2, got {n}")));
    }
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
    let order: Vec<usize> = if pos.len() < k {
        log::warn!("{} positives for {k} folds; using unstratified folds", pos.len());
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        all
    } else {
        pos.shuffle(rng);
        neg.shuffle(rng);
        pos.into_iter().chain(neg).collect()
    };
    let mut folds = vec![Vec::new(); k];
    for (slot, i) in order.into_iter().enumerate() {
        folds[slot % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn majority(labels: &[bool]) -> bool {
    2 * labels.iter().filter(|&&y| y).count() >= labels.len()
}

struct FoldOutput {
    scores: Vec<f64>,
    predicted: Vec<bool>,
    record: FoldRecord,
}

fn run_fold(matrix: &FeatureMatrix, labels: &[bool], test: &[usize], spec: &ClassifierSpec, repeat: usize, fold: usize) -> Result<FoldOutput> {
    let train: Vec<usize> = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
    let (x_tr, x_te, prep) = prepare_split(matrix, &train, test)?;
    let scaler = Standardizer::fit(x_tr.view())?;
    let z_tr = scaler.transform(x_tr.view())?;
    let z_te = scaler.transform(x_te.view())?;
    let y_tr: Vec<bool> = train.iter().map(|&i| labels[i]).collect();

    let all_cols: Vec<usize> = (0..z_tr.ncols()).collect();
    let cols = if spec.uses_selection() {
        match *spec {
            ClassifierSpec::Knn { k, .. } => sfs_knn(z_tr.view(), &y_tr, &prep.columns, k).selected,
            ClassifierSpec::Logistic { lambda, .. } => sfs_logistic(z_tr.view(), &y_tr, &prep.columns, lambda).selected,
            ClassifierSpec::Majority => unreachable!(),
        }
    } else {
        all_cols
    };
    let selected: Vec<String> = cols.iter().map(|&c| prep.columns[c].clone()).collect();

    let fallback = || {
        let p = y_tr.iter().filter(|&&y| y).count() as f64 / y_tr.len() as f64;
        (vec![p; test.len()], vec![majority(&y_tr); test.len()])
    };
    let (scores, predicted) = match *spec {
        _ if cols.is_empty() => fallback(),
        ClassifierSpec::Majority => fallback(),
        ClassifierSpec::Knn { k, .. } => {
            let m = KnnModel::fit(z_tr.select(Axis(1), &cols).view(), &y_tr, k, false)?;
            let preds = m.predict_batch(z_te.select(Axis(1), &cols).view())?;
            (preds.iter().map(|p| p.vote_fraction).collect(), preds.iter().map(|p| p.label).collect())
        }
        ClassifierSpec::Logistic { lambda, .. } => {
            let m = train_logistic(z_tr.select(Axis(1), &cols).view(), &y_tr, &LogisticConfig { lambda, standardize: false })?;
            let p = m.predict_proba_batch(z_te.select(Axis(1), &cols).view())?;
            let labels = p.iter().map(|&v| v >= 0.5).collect();
            (p, labels)
        }
    };
    Ok(FoldOutput { scores, predicted, record: FoldRecord { repeat, fold, prep, scaler, selected } })
}

struct RepeatOutput {
    report: MetricsReport,
    fixed: MetricsReport,
    best_accuracy: Option<f64>,
    folds: Vec<FoldRecord>,
}

fn run_repeat(matrix: &FeatureMatrix, labels: &[bool], spec: &ClassifierSpec, config: &CvConfig, repeat: usize) -> Result<RepeatOutput> {
    let folds = stratified_folds(labels, config.folds, &mut repeat_rng(config.seed, repeat as u64))?;
    let n = labels.len();
    let mut scores = vec![0.0; n];
    let mut predicted = vec![false; n];
    let mut records = Vec::with_capacity(folds.len());
    for (f, test) in folds.iter().enumerate() {
        let out = run_fold(matrix, labels, test, spec, repeat, f)?;
        for (j, &i) in test.iter().enumerate() {
            scores[i] = out.scores[j];
            predicted[i] = out.predicted[j];
        }
        records.push(out.record);
    }
    let report = MetricsReport::evaluate(labels, &predicted, &scores)?;
    let fixed = fixed_sensitivity_operating_point(labels, &scores, config.target_sensitivity)?.report;
    let best_accuracy = best_accuracy_operating_point(labels, &scores)?.report.accuracy;
    Ok(RepeatOutput { report, fixed, best_accuracy, folds: records })
}

/// Repeated k-fold CV; every preprocessing step and the feature selection are
/// refitted inside each training fold. Repeats run in parallel and merge in order.
pub fn repeated_kfold(matrix: &FeatureMatrix, labels: &[bool], spec: &ClassifierSpec, config: &CvConfig, keep_folds: bool) -> Result<CvResult> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch { expected: matrix.n_rows(), found: labels.len() });
    }
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(Error::domain("cross-validation needs both classes"));
    }
    if let ClassifierSpec::Knn { k: 0, .. } = spec {
        return Err(Error::config("K must be at least 1"));
    }
    let outputs: Vec<RepeatOutput> = (0..config.repeats)
        .into_par_iter()
        .map(|r| run_repeat(matrix, labels, spec, config, r))
        .collect::<Result<_>>()?;
    let per_repeat: Vec<MetricsReport> = outputs.iter().map(|o| o.report.clone()).collect();
    let fixed: Vec<MetricsReport> = outputs.iter().map(|o| o.fixed.clone()).collect();
    let best_threshold_accuracy = MeanStd::of(outputs.iter().map(|o| o.best_accuracy));
    let folds = if keep_folds { outputs.into_iter().flat_map(|o| o.folds).collect() } else { Vec::new() };
    Ok(CvResult {
        model: *spec,
        averaged: AveragedMetrics::from_reports(&per_repeat),
        per_repeat,
        fixed_sensitivity: AveragedMetrics::from_reports(&fixed),
        best_threshold_accuracy,
        folds,
    })
}
