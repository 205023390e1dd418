//! K-nearest-neighbour majority vote with ties going to the positive class.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::kernel::sq_dist;
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnPrediction<T> {
    pub label: bool,
    /// Fraction of the K neighbours that are positive.
    pub vote_fraction: T,
}

/// Votes among the `k` nearest of `dist` (any monotone distance).
///
/// Neighbours are ordered by distance, positive label first on equal distance,
/// so the outcome never depends on row order.
pub fn knn_vote<T: Scalar>(dist: &[T], labels: &[bool], k: usize) -> KnnPrediction<T> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    let key = |a: &usize, b: &usize| {
        dist[*a].partial_cmp(&dist[*b]).unwrap_or(Ordering::Equal).then(labels[*b].cmp(&labels[*a]))
    };
    let k = k.min(order.len());
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, key);
    }
    let positives = order[..k].iter().filter(|&&i| labels[i]).count();
    let vote_fraction = T::from_usize_lossy(positives) / T::from_usize_lossy(k);
    KnnPrediction { label: 2 * positives >= k, vote_fraction }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel<T> {
    pub k: usize,
    pub scaler: Standardizer<T>,
    pub x: Array2<T>,
    pub labels: Vec<bool>,
}

impl<T: Scalar> KnnModel<T> {
    pub fn fit(x: ArrayView2<T>, labels: &[bool], k: usize, standardize: bool) -> Result<Self> {
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: labels.len() });
        }
        if k == 0 || k > x.nrows() {
            return Err(Error::domain(format!("K = {k} with {} training rows", x.nrows())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("training matrix contains missing or non-finite values"));
        }
        let scaler = if standardize { Standardizer::fit(x)? } else { Standardizer::identity(x.ncols()) };
        Ok(Self { k, x: scaler.transform(x)?, scaler, labels: labels.to_vec() })
    }

    pub fn predict(&self, query: ArrayView1<T>) -> Result<KnnPrediction<T>> {
        let z = self.scaler.transform_row(query)?;
        let dist: Vec<T> = self.x.rows().into_iter().map(|r| sq_dist(r, z.view())).collect();
        Ok(knn_vote(&dist, &self.labels, self.k))
    }

    pub fn predict_batch(&self, x: ArrayView2<T>) -> Result<Vec<KnnPrediction<T>>> {
        x.rows().into_iter().map(|r| self.predict(r)).collect()
    }
}
