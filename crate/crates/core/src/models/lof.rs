//! Local outlier factor.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::kernel::sq_dist;
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofModel<T> {
    pub k: usize,
    pub scaler: Standardizer<T>,
    pub x: Array2<T>,
    pub k_distance: Vec<T>,
    pub lrd: Vec<T>,
}

/// Indices and distances of the `k` nearest rows, skipping `exclude`; ties by index.
fn neighbors<T: Scalar>(x: &Array2<T>, q: ArrayView1<T>, k: usize, exclude: Option<usize>) -> Vec<(usize, T)> {
    let mut d: Vec<(usize, T)> = x
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, r)| (i, sq_dist(r, q).sqrt()))
        .collect();
    d.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distance").then(a.0.cmp(&b.0)));
    d.truncate(k);
    d
}

fn local_reachability<T: Scalar>(nb: &[(usize, T)], k_distance: &[T]) -> T {
    let reach: T = nb.iter().map(|&(o, d)| d.max(k_distance[o])).sum::<T>() / T::from_usize_lossy(nb.len());
    T::one() / reach.max(T::epsilon())
}

impl<T: Scalar> LofModel<T> {
    pub fn fit(x: ArrayView2<T>, k: usize, standardize: bool) -> Result<Self> {
        if k == 0 || k >= x.nrows() {
            return Err(Error::domain(format!("LOF needs 0 < k < n, got k = {k}, n = {}", x.nrows())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("training matrix contains missing or non-finite values"));
        }
        let scaler = if standardize { Standardizer::fit(x)? } else { Standardizer::identity(x.ncols()) };
        let z = scaler.transform(x)?;
        let nbs: Vec<Vec<(usize, T)>> = (0..z.nrows()).map(|i| neighbors(&z, z.row(i), k, Some(i))).collect();
        let k_distance: Vec<T> = nbs.iter().map(|nb| nb[k - 1].1).collect();
        let lrd = nbs.iter().map(|nb| local_reachability(nb, &k_distance)).collect();
        Ok(Self { k, scaler, x: z, k_distance, lrd })
    }

    fn score_scaled(&self, z: ArrayView1<T>, exclude: Option<usize>) -> T {
        let nb = neighbors(&self.x, z, self.k, exclude);
        let own = local_reachability(&nb, &self.k_distance);
        let mean_nb: T = nb.iter().map(|&(o, _)| self.lrd[o]).sum::<T>() / T::from_usize_lossy(nb.len());
        mean_nb / own
    }

    /// LOF of a new point; about 1 for inliers, large for outliers.
    pub fn score(&self, x: ArrayView1<T>) -> Result<T> {
        let z = self.scaler.transform_row(x)?;
        Ok(self.score_scaled(z.view(), None))
    }

    /// LOF of each training row with itself excluded from its neighbourhood.
    pub fn training_scores(&self) -> Vec<T> {
        (0..self.x.nrows()).map(|i| self.score_scaled(self.x.row(i), Some(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn grid() -> Array2<f64> {
        Array2::from_shape_fn((100, 2), |(i, j)| if j == 0 { (i / 10) as f64 } else { (i % 10) as f64 })
    }

    #[test]
    fn grid_interior_near_one_and_outlier_high() {
        let m = LofModel::fit(grid().view(), 8, false).unwrap();
        let s = m.score(array![4.5, 4.5].view()).unwrap();
        assert!((s - 1.0).abs() < 0.2, "{s}");
        let far = m.score(array![40.0, 40.0].view()).unwrap();
        assert!(far > 1.5, "{far}");
    }

    #[test]
    fn translation_invariant() {
        let a = LofModel::fit(grid().view(), 5, false).unwrap();
        let b = LofModel::fit((grid() + 123.25).view(), 5, false).unwrap();
        let sa = a.score(array![3.3, 7.1].view()).unwrap();
        let sb = b.score(array![126.55, 130.35].view()).unwrap();
        assert!((sa - sb).abs() < 1e-9);
    }

    #[test]
    fn duplicates_do_not_blow_up() {
        let x = array![[1.0f64], [1.0], [1.0], [1.0], [2.0]];
        let m = LofModel::fit(x.view(), 2, false).unwrap();
        assert!(m.training_scores().iter().all(|s| s.is_finite()));
        assert!(LofModel::fit(x.view(), 5, false).is_err());
    }
}
