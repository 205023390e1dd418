//! Experiment configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ablation::DEFAULT_MONITORING_DAYS;
use super::benchmark::BenchmarkConfig;
use super::cv::{ClassifierSpec, CvConfig, DEFAULT_FOLDS, DEFAULT_REPEATS, DEFAULT_TARGET_SENSITIVITY};
use super::early_warning::{AnomalyModelSpec, LabelMode};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, ModalityTag};
use crate::models::LACE_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarlyWarningConfig {
    pub windows: Vec<u32>,
    pub horizons: Vec<u32>,
    pub label_mode: LabelMode,
    pub repeats: usize,
    pub models: Vec<AnomalyModelSpec>,
    pub modalities: Vec<ModalityTag>,
}

impl Default for EarlyWarningConfig {
    fn default() -> Self {
        Self {
            windows: (1..=7).collect(),
            horizons: (1..=7).collect(),
            label_mode: LabelMode::Exact,
            repeats: 100,
            models: AnomalyModelSpec::standard_set(),
            modalities: ModalityTag::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub k_days: u32,
    pub folds: usize,
    pub repeats: usize,
    pub target_sensitivity: f64,
    pub models: Vec<ClassifierSpec>,
    pub modalities: Vec<ModalityTag>,
    pub lace_threshold: u32,
    pub modality_ablation: bool,
    /// Empty disables the monitoring-length ablation.
    pub monitoring_days: Vec<u32>,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            k_days: 20,
            folds: DEFAULT_FOLDS,
            repeats: DEFAULT_REPEATS,
            target_sensitivity: DEFAULT_TARGET_SENSITIVITY,
            models: vec![
                ClassifierSpec::default(),
                ClassifierSpec::Logistic { lambda: 0.1, feature_selection: false },
                ClassifierSpec::Majority,
            ],
            modalities: ModalityTag::ALL.to_vec(),
            lace_threshold: LACE_THRESHOLD,
            modality_ablation: true,
            monitoring_days: DEFAULT_MONITORING_DAYS.to_vec(),
        }
    }
}

impl RiskConfig {
    pub fn cv(&self, seed: u64) -> CvConfig {
        CvConfig { folds: self.folds, repeats: self.repeats, seed, target_sensitivity: self.target_sensitivity }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub features: FeatureConfig,
    pub early_warning: EarlyWarningConfig,
    pub risk: RiskConfig,
    /// Used by the early-warning command when run on the planted-outlier benchmark.
    pub benchmark: BenchmarkConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let ew = &self.early_warning;
        if ew.windows.iter().chain(&ew.horizons).any(|&d| !(1..=7).contains(&d)) {
            return Err(Error::config("windows and horizons must lie in 1..=7 days"));
        }
        if ew.repeats == 0 || self.risk.repeats == 0 {
            return Err(Error::config("repeats must be positive"));
        }
        if ew.modalities.is_empty() || self.risk.modalities.is_empty() {
            return Err(Error::config("modality subset must not be empty"));
        }
        for m in &ew.models {
            let ok = match *m {
                AnomalyModelSpec::WeightedOcSvm { nu, beta } => nu > 0.0 && nu <= 1.0 && beta > 0.0 && beta <= 1.0,
                AnomalyModelSpec::OcSvm { nu } => nu > 0.0 && nu <= 1.0,
                AnomalyModelSpec::Lof { neighbors, contamination } => neighbors >= 1 && (0.0..1.0).contains(&contamination),
                AnomalyModelSpec::KMeans { clusters, contamination } => clusters >= 1 && (0.0..1.0).contains(&contamination),
            };
            if !ok {
                return Err(Error::config(format!("invalid hyperparameters for {}", m.name())));
            }
        }
        let r = &self.risk;
        if r.k_days == 0 || r.monitoring_days.contains(&0) {
            return Err(Error::config("monitoring length must be at least one day"));
        }
        if r.folds < 2 {
            return Err(Error::config("folds must be at least 2"));
        }
        if !(0.0..=1.0).contains(&r.target_sensitivity) {
            return Err(Error::config("target_sensitivity outside [0,1]"));
        }
        if r.models.iter().any(|m| matches!(m, ClassifierSpec::Knn { k: 0, .. })) {
            return Err(Error::config("K must be at least 1"));
        }
        if r.models.iter().any(|m| matches!(m, ClassifierSpec::Logistic { lambda, .. } if *lambda < 0.0)) {
            return Err(Error::config("lambda must be non-negative"));
        }
        if self.features.cooccurrence_levels < 2 || self.features.cooccurrence_lag == 0 {
            return Err(Error::config("co-occurrence needs at least 2 levels and a positive lag"));
        }
        Ok(())
    }
}
