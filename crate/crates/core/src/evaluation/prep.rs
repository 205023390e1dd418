//! Training-only preprocessing shared by both protocols.

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{FeatureMatrix, ImputationMeans};

/// Independent generator for repeat `stream` of an experiment seeded with `seed`.
pub fn repeat_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// What was fitted on the training rows of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPrep {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Columns kept (observed somewhere in the training rows).
    pub columns: Vec<String>,
    pub dropped: Vec<String>,
    pub imputation: ImputationMeans,
}

/// Drops columns with no observed training value, imputes with training means,
/// and returns dense train and test blocks.
pub fn prepare_split(matrix: &FeatureMatrix, train: &[usize], test: &[usize]) -> Result<(Array2<f64>, Array2<f64>, FoldPrep)> {
    let (mut kept, dropped) = matrix.drop_unobserved_columns(train);
    let imputation = ImputationMeans::fit(&kept, train)?;
    imputation.apply(&mut kept, train)?;
    imputation.apply(&mut kept, test)?;
    let x_train = kept.values.select(Axis(0), train);
    let x_test = kept.values.select(Axis(0), test);
    let prep = FoldPrep { train: train.to_vec(), test: test.to_vec(), columns: kept.names.clone(), dropped, imputation };
    Ok((x_train, x_test, prep))
}
