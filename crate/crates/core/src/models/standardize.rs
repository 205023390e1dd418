//! Column-wise z-scoring with statistics from training rows.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    /// Population standard deviation; constant columns keep scale 1.
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: ArrayView2<T>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::domain("cannot standardize zero rows"));
        }
        let n = T::from_usize_lossy(x.nrows());
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let m = col.iter().copied().sum::<T>() / n;
            let v = col.iter().map(|&c| (c - m) * (c - m)).sum::<T>() / n;
            let s = v.sqrt();
            mean.push(m);
            scale.push(if s > T::zero() && s.is_finite() { s } else { T::one() });
        }
        Ok(Self { mean, scale })
    }

    pub fn identity(p: usize) -> Self {
        Self { mean: vec![T::zero(); p], scale: vec![T::one(); p] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.ncols() });
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.scale[j]);
        }
        Ok(out)
    }

    pub fn transform_row(&self, x: ArrayView1<T>) -> Result<Array1<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(Array1::from_iter(x.iter().enumerate().map(|(j, &v)| (v - self.mean[j]) / self.scale[j])))
    }
}
