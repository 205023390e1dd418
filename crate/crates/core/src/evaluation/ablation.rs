//! Modality and monitoring-length ablations over repeated CV.

use serde::{Deserialize, Serialize};

use super::cv::{repeated_kfold, ClassifierSpec, CvConfig, CvResult};
use crate::error::{Error, Result};
use crate::features::{extract_patient_matrix, FeatureConfig, FeatureMatrix, ModalityTag};
use crate::ingest::PatientRecord;

pub const DEFAULT_MONITORING_DAYS: [u32; 4] = [5, 10, 15, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub result: CvResult,
}

/// `Step+HR+Sleep` style label in canonical modality order.
pub fn subset_label(subset: &[ModalityTag]) -> String {
    ModalityTag::ALL.iter().filter(|m| subset.contains(m)).map(|m| m.as_str()).collect::<Vec<_>>().join("+")
}

/// The seven non-empty modality subsets, singletons first.
pub fn all_modality_subsets() -> Vec<Vec<ModalityTag>> {
    let mut out: Vec<Vec<ModalityTag>> = (1u8..8)
        .map(|mask| ModalityTag::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &m)| m).collect())
        .collect();
    out.sort_by_key(|s| s.len());
    out
}

pub fn modality_ablation(
    matrix: &FeatureMatrix,
    labels: &[bool],
    subsets: &[Vec<ModalityTag>],
    spec: &ClassifierSpec,
    config: &CvConfig,
) -> Result<Vec<AblationRow>> {
    subsets
        .iter()
        .map(|subset| {
            if subset.is_empty() {
                return Err(Error::config("modality subset must not be empty"));
            }
            let restricted = matrix.restrict_modalities(subset);
            Ok(AblationRow { label: subset_label(subset), result: repeated_kfold(&restricted, labels, spec, config, false)? })
        })
        .collect()
}

/// Re-extracts features from the first `k` days for each `k` and reruns CV.
pub fn monitoring_length_ablation(
    records: &[PatientRecord],
    labels: &[bool],
    days: &[u32],
    features: &FeatureConfig,
    spec: &ClassifierSpec,
    config: &CvConfig,
) -> Result<Vec<AblationRow>> {
    days.iter()
        .map(|&k| {
            let matrix = extract_patient_matrix(records, k, features)?;
            Ok(AblationRow { label: format!("{k}d"), result: repeated_kfold(&matrix, labels, spec, config, false)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_subsets() {
        let s = all_modality_subsets();
        assert_eq!(s.len(), 7);
        assert_eq!(subset_label(&s[6]), "Step+HR+Sleep");
        assert_eq!(subset_label(&[ModalityTag::Sleep, ModalityTag::Step]), "Step+Sleep");
    }
}
