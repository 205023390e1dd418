//! Versioned JSON model files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile<M> {
    pub format_version: u32,
    pub model_type: String,
    pub seed: Option<u64>,
    pub model: M,
}

pub fn save_model<M: Serialize>(path: &Path, model_type: &str, seed: Option<u64>, model: &M) -> Result<()> {
    let file = ModelFile { format_version: MODEL_FORMAT_VERSION, model_type: model_type.to_string(), seed, model };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model<M: DeserializeOwned>(path: &Path, model_type: &str) -> Result<ModelFile<M>> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile<M> = serde_json::from_str(&text)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::config(format!("unsupported model format version {}", file.format_version)));
    }
    if file.model_type != model_type {
        return Err(Error::config(format!("expected a `{model_type}` model, found `{}`", file.model_type)));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{train_weighted_ocsvm, WeightedOcSvmConfig, WeightedOcSvmModel};
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn round_trip_preserves_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Array2<f64> = Array2::from_shape_fn((30, 3), |_| StandardNormal.sample(&mut rng));
        let m = train_weighted_ocsvm(x.view(), &WeightedOcSvmConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&path, "weighted_ocsvm", Some(3), &m).unwrap();
        let back: ModelFile<WeightedOcSvmModel<f64>> = load_model(&path, "weighted_ocsvm").unwrap();
        assert_eq!(back.model, m);
        assert_eq!(back.model.model.decision_batch(x.view()).unwrap(), m.model.decision_batch(x.view()).unwrap());
        assert!(load_model::<WeightedOcSvmModel<f64>>(&path, "knn").is_err());
    }
}
