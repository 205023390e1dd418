//! Mean imputation, fitted on one set of rows and applied to another.

use serde::{Deserialize, Serialize};

use super::assemble::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationMeans {
    pub means: Vec<f64>,
}

impl ImputationMeans {
    /// Per-column mean over the observed cells of `rows`.
    pub fn fit(matrix: &FeatureMatrix, rows: &[usize]) -> Result<Self> {
        let mut means = Vec::with_capacity(matrix.n_cols());
        for j in 0..matrix.n_cols() {
            let (sum, n) = rows
                .iter()
                .filter(|&&i| !matrix.missing[[i, j]])
                .fold((0.0, 0usize), |(s, n), &i| (s + matrix.values[[i, j]], n + 1));
            if n == 0 {
                return Err(Error::AllMissing(matrix.names[j].clone()));
            }
            means.push(sum / n as f64);
        }
        Ok(Self { means })
    }

    /// Fills missing cells of `rows`; observed cells and the mask are untouched.
    pub fn apply(&self, matrix: &mut FeatureMatrix, rows: &[usize]) -> Result<()> {
        if self.means.len() != matrix.n_cols() {
            return Err(Error::DimensionMismatch { expected: matrix.n_cols(), found: self.means.len() });
        }
        for &i in rows {
            for (j, &m) in self.means.iter().enumerate() {
                if matrix.missing[[i, j]] {
                    matrix.values[[i, j]] = m;
                }
            }
        }
        Ok(())
    }
}

/// Imputes every row from means over all rows.
pub fn impute_missing(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    let means = ImputationMeans::fit(matrix, &rows)?;
    let mut out = matrix.clone();
    means.apply(&mut out, &rows)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::catalog::ModalityTag;
    use ndarray::array;
    use proptest::prelude::*;

    fn matrix(values: ndarray::Array2<f64>) -> FeatureMatrix {
        let missing = values.mapv(f64::is_nan);
        let p = values.ncols();
        FeatureMatrix {
            names: (0..p).map(|j| format!("f{j}")).collect(),
            modalities: vec![ModalityTag::Hr; p],
            ids: (0..values.nrows()).map(|i| format!("e{i}")).collect(),
            values,
            missing,
        }
    }

    #[test]
    fn fills_with_observed_mean() {
        let m = matrix(array![[2.0, 1.0], [4.0, 1.0], [f64::NAN, 1.0]]);
        let out = impute_missing(&m).unwrap();
        assert_eq!(out.values[[2, 0]], 3.0);
        assert!(out.missing[[2, 0]]);
    }

    #[test]
    fn complete_matrix_unchanged() {
        let m = matrix(array![[2.0, 1.0], [4.0, 5.0]]);
        assert_eq!(impute_missing(&m).unwrap(), m);
    }

    #[test]
    fn all_missing_names_the_feature() {
        let m = matrix(array![[1.0, f64::NAN], [2.0, f64::NAN]]);
        match impute_missing(&m) {
            Err(Error::AllMissing(name)) => assert_eq!(name, "f1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn test_rows_receive_training_means() {
        let mut m = matrix(array![[1.0], [3.0], [100.0], [f64::NAN]]);
        let means = ImputationMeans::fit(&m, &[0, 1]).unwrap();
        means.apply(&mut m, &[3]).unwrap();
        assert_eq!(m.values[[3, 0]], 2.0);
    }

    proptest! {
        #[test]
        fn observed_entries_never_change(cells in prop::collection::vec(prop::option::of(-1e3f64..1e3), 12)) {
            let mut vals: Vec<f64> = cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect();
            // Guarantee each of the three columns has one observation.
            for j in 0..3 { if vals[j].is_nan() { vals[j] = 0.5; } }
            let m = matrix(ndarray::Array2::from_shape_vec((4, 3), vals).unwrap());
            let out = impute_missing(&m).unwrap();
            for ((i, j), &v) in m.values.indexed_iter() {
                if !m.missing[[i, j]] { prop_assert_eq!(out.values[[i, j]].to_bits(), v.to_bits()); }
                else { prop_assert!(out.values[[i, j]].is_finite()); }
            }
        }
    }
}
