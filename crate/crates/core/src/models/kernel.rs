//! Kernels and Gram matrices.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec<T> {
    Linear,
    Rbf { gamma: T },
}

/// Kernel request resolved against training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelChoice<T> {
    Linear,
    /// `None` uses `1 / (p * Var(X))`.
    Rbf { gamma: Option<T> },
}

impl<T: Scalar> Default for KernelChoice<T> {
    fn default() -> Self {
        KernelChoice::Rbf { gamma: None }
    }
}

impl<T: Scalar> KernelChoice<T> {
    pub fn resolve(self, x: ArrayView2<T>) -> Result<KernelSpec<T>> {
        match self {
            KernelChoice::Linear => Ok(KernelSpec::Linear),
            KernelChoice::Rbf { gamma: Some(g) } => KernelSpec::rbf(g),
            KernelChoice::Rbf { gamma: None } => KernelSpec::rbf_default(x),
        }
    }
}

pub fn sq_dist<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

impl<T: Scalar> KernelSpec<T> {
    pub fn rbf(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::domain("RBF gamma must be positive and finite"));
        }
        Ok(KernelSpec::Rbf { gamma })
    }

    /// RBF with `gamma = 1 / (p * Var(X))`, the variance taken over every entry.
    pub fn rbf_default(x: ArrayView2<T>) -> Result<Self> {
        let count = x.len();
        if count == 0 {
            return Err(Error::domain("cannot size a kernel on an empty matrix"));
        }
        let n = T::from_usize_lossy(count);
        let mean = x.iter().copied().sum::<T>() / n;
        let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        if var <= T::zero() {
            return Err(Error::degenerate("all feature values identical"));
        }
        Self::rbf(T::one() / (T::from_usize_lossy(x.ncols()) * var))
    }

    pub fn eval(&self, a: ArrayView1<T>, b: ArrayView1<T>) -> T {
        match *self {
            KernelSpec::Linear => a.dot(&b),
            KernelSpec::Rbf { gamma } => (-gamma * sq_dist(a, b)).exp(),
        }
    }

    pub fn gram(&self, x: ArrayView2<T>) -> Array2<T> {
        let n = x.nrows();
        let mut k = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = self.eval(x.row(i), x.row(j));
                k[[i, j]] = v;
                k[[j, i]] = v;
            }
        }
        k
    }
}
