//! ν-one-class SVM trained by SMO on the dual
//!
//! `min ½ αᵀKα  s.t.  Σα = 1,  0 ≤ α ≤ 1/(ν m)`.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::kernel::{KernelChoice, KernelSpec};
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const KKT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 100_000;
const MIN_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcSvmConfig<T> {
    pub nu: T,
    pub kernel: KernelChoice<T>,
    /// z-score features with training statistics before the kernel.
    pub standardize: bool,
}

impl<T: Scalar> Default for OcSvmConfig<T> {
    fn default() -> Self {
        Self { nu: T::lit(0.09), kernel: KernelChoice::default(), standardize: true }
    }
}

impl<T: Scalar> OcSvmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > T::zero() && self.nu <= T::one()) {
            return Err(Error::config(format!("nu must lie in (0, 1], got {}", self.nu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DualSolution<T> {
    /// Coefficients aligned with the active index list.
    pub alpha: Vec<T>,
    pub rho: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the dual restricted to `active` rows/columns of `gram`.
pub(crate) fn solve_dual<T: Scalar>(gram: ArrayView2<T>, active: &[usize], nu: T) -> DualSolution<T> {
    let m = active.len();
    let c = T::one() / (nu * T::from_usize_lossy(m));
    let q = |a: usize, b: usize| gram[[active[a], active[b]]];

    let mut alpha = vec![T::zero(); m];
    let mut remaining = T::one();
    for a in alpha.iter_mut() {
        if remaining <= T::zero() {
            break;
        }
        *a = c.min(remaining);
        remaining = remaining - *a;
    }
    let mut grad: Vec<T> = (0..m)
        .map(|k| (0..m).filter(|&l| alpha[l] > T::zero()).map(|l| q(k, l) * alpha[l]).sum())
        .collect();

    let tol = T::lit(KKT_TOLERANCE);
    let tau = T::lit(MIN_CURVATURE);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        // i may gain mass (α < C) with the smallest gradient, j may lose mass (α > 0) with the largest.
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        for k in 0..m {
            if alpha[k] < c && (i == usize::MAX || grad[k] < grad[i]) {
                i = k;
            }
            if alpha[k] > T::zero() && (j == usize::MAX || grad[k] > grad[j]) {
                j = k;
            }
        }
        if i == usize::MAX || j == usize::MAX || grad[j] - grad[i] < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let curvature = (q(i, i) + q(j, j) - q(i, j) - q(i, j)).max(tau);
        let mut t = (grad[j] - grad[i]) / curvature;
        let room_i = c - alpha[i];
        let room_j = alpha[j];
        if t >= room_i {
            t = room_i;
        }
        if t >= room_j {
            t = room_j;
        }
        alpha[i] = if t == room_i { c } else { alpha[i] + t };
        alpha[j] = if t == room_j { T::zero() } else { alpha[j] - t };
        for (k, g) in grad.iter_mut().enumerate() {
            *g = *g + t * (q(k, i) - q(k, j));
        }
    }
    if !converged {
        log::warn!("one-class SVM dual stopped after {MAX_ITERATIONS} iterations without reaching tolerance");
    }

    // Every point below the upper bound must satisfy G >= ρ; the tightest such ρ keeps
    // non-bounded points on the non-negative side of the boundary.
    let below_bound = (0..m).filter(|&k| alpha[k] < c).map(|k| grad[k]);
    let rho = below_bound
        .reduce(T::min)
        .unwrap_or_else(|| grad.iter().copied().fold(T::neg_infinity(), T::max));
    DualSolution { alpha, rho, iterations, converged }
}

/// `Kα` evaluated at every row of `gram` for coefficients on `active`.
pub(crate) fn kernel_expansion<T: Scalar>(gram: ArrayView2<T>, active: &[usize], alpha: &[T]) -> Vec<T> {
    (0..gram.nrows())
        .map(|r| {
            active
                .iter()
                .zip(alpha)
                .filter(|(_, &a)| a > T::zero())
                .map(|(&s, &a)| gram[[r, s]] * a)
                .sum()
        })
        .collect()
}

pub(crate) fn check_training_matrix<T: Scalar>(x: ArrayView2<T>) -> Result<()> {
    if x.nrows() < 2 {
        return Err(Error::domain("one-class SVM needs at least two training rows"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("training matrix contains missing or non-finite values"));
    }
    let first = x.row(0);
    if x.axis_iter(Axis(0)).all(|r| r == first) {
        return Err(Error::degenerate("all training rows are identical"));
    }
    Ok(())
}

/// Standardised training data and the resolved kernel with its Gram matrix.
pub(crate) struct Prepared<T> {
    pub scaler: Standardizer<T>,
    pub z: Array2<T>,
    pub kernel: KernelSpec<T>,
    pub gram: Array2<T>,
}

pub(crate) fn prepare<T: Scalar>(x: ArrayView2<T>, config: &OcSvmConfig<T>) -> Result<Prepared<T>> {
    config.validate()?;
    check_training_matrix(x)?;
    let scaler = if config.standardize { Standardizer::fit(x)? } else { Standardizer::identity(x.ncols()) };
    let z = scaler.transform(x)?;
    let kernel = config.kernel.resolve(z.view())?;
    let gram = kernel.gram(z.view());
    Ok(Prepared { scaler, z, kernel, gram })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcSvmModel<T> {
    pub kernel: KernelSpec<T>,
    pub scaler: Standardizer<T>,
    /// Support vectors in standardised space.
    pub support_vectors: Array2<T>,
    pub alpha: Vec<T>,
    pub rho: T,
    pub nu: T,
    pub n_train: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> OcSvmModel<T> {
    pub(crate) fn from_solution(p: &Prepared<T>, active: &[usize], sol: &DualSolution<T>, nu: T) -> Self {
        let (rows, alpha): (Vec<usize>, Vec<T>) = active
            .iter()
            .zip(&sol.alpha)
            .filter(|(_, &a)| a > T::zero())
            .map(|(&r, &a)| (r, a))
            .unzip();
        Self {
            kernel: p.kernel,
            scaler: p.scaler.clone(),
            support_vectors: p.z.select(Axis(0), &rows),
            alpha,
            rho: sol.rho,
            nu,
            n_train: active.len(),
            iterations: sol.iterations,
            converged: sol.converged,
        }
    }

    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn n_support(&self) -> usize {
        self.alpha.len()
    }

    /// `Σ αᵢ k(xᵢ, x) − ρ`; negative means anomalous.
    pub fn decision(&self, x: ArrayView1<T>) -> Result<T> {
        let z = self.scaler.transform_row(x)?;
        let s: T = self
            .support_vectors
            .axis_iter(Axis(0))
            .zip(&self.alpha)
            .map(|(sv, &a)| a * self.kernel.eval(sv, z.view()))
            .sum();
        Ok(s - self.rho)
    }

    pub fn decision_batch(&self, x: ArrayView2<T>) -> Result<Vec<T>> {
        x.axis_iter(Axis(0)).map(|r| self.decision(r)).collect()
    }

    pub fn is_anomaly(&self, x: ArrayView1<T>, threshold: T) -> Result<bool> {
        Ok(self.decision(x)? < threshold)
    }
}

pub fn train_ocsvm<T: Scalar>(x: ArrayView2<T>, config: &OcSvmConfig<T>) -> Result<OcSvmModel<T>> {
    let p = prepare(x, config)?;
    let active: Vec<usize> = (0..x.nrows()).collect();
    let sol = solve_dual(p.gram.view(), &active, config.nu);
    Ok(OcSvmModel::from_solution(&p, &active, &sol, config.nu))
}
