//! L2-regularised logistic regression fitted by damped Newton steps.

use nalgebra::{DMatrix, DVector, RealField};
use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_NEWTON_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig<T> {
    /// Penalty `λ/2 ‖w‖²` on the weights; the intercept is not penalised.
    pub lambda: T,
    pub standardize: bool,
}

impl<T: Scalar> Default for LogisticConfig<T> {
    fn default() -> Self {
        Self { lambda: T::lit(0.1), standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel<T> {
    pub scaler: Standardizer<T>,
    pub weights: Vec<T>,
    pub intercept: T,
    pub lambda: T,
    pub iterations: usize,
    pub gradient_norm: T,
}

fn sigmoid<T: Scalar>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

/// `log(1 + e^s)` without overflow.
fn softplus<T: Scalar>(s: T) -> T {
    if s > T::zero() {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn margins<T: Scalar>(w: &[T], b: T, z: ArrayView2<T>) -> Vec<T> {
    z.rows().into_iter().map(|r| r.iter().zip(w).map(|(&x, &wi)| x * wi).sum::<T>() + b).collect()
}

/// Mean negative log-likelihood plus `λ/2 ‖w‖²`.
pub fn logistic_loss<T: Scalar>(w: &[T], b: T, z: ArrayView2<T>, y: &[bool], lambda: T) -> T {
    let n = T::from_usize_lossy(z.nrows());
    let nll: T = margins(w, b, z)
        .into_iter()
        .zip(y)
        .map(|(s, &yi)| softplus(s) - if yi { s } else { T::zero() })
        .sum();
    nll / n + lambda * w.iter().map(|&v| v * v).sum::<T>() / T::lit(2.0)
}

/// Gradient of [`logistic_loss`] with respect to `(w, b)`.
pub fn logistic_gradient<T: Scalar>(w: &[T], b: T, z: ArrayView2<T>, y: &[bool], lambda: T) -> (Vec<T>, T) {
    let n = T::from_usize_lossy(z.nrows());
    let mut gw: Vec<T> = w.iter().map(|&v| lambda * v).collect();
    let mut gb = T::zero();
    for (r, (s, &yi)) in z.rows().into_iter().zip(margins(w, b, z).into_iter().zip(y)) {
        let e = (sigmoid(s) - if yi { T::one() } else { T::zero() }) / n;
        for (g, &x) in gw.iter_mut().zip(r.iter()) {
            *g = *g + e * x;
        }
        gb = gb + e;
    }
    (gw, gb)
}

fn norm<T: Scalar>(gw: &[T], gb: T) -> T {
    (gw.iter().map(|&g| g * g).sum::<T>() + gb * gb).sqrt()
}

pub fn train_logistic<T: Scalar + RealField>(x: ArrayView2<T>, y: &[bool], config: &LogisticConfig<T>) -> Result<LogisticModel<T>> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::degenerate("logistic regression needs both classes"));
    }
    if !(config.lambda > T::zero()) {
        return Err(Error::config("lambda must be positive"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("training matrix contains missing or non-finite values"));
    }
    let scaler = if config.standardize { Standardizer::fit(x)? } else { Standardizer::identity(x.ncols()) };
    let z = scaler.transform(x)?;
    let (n, p) = z.dim();
    let lambda = config.lambda;
    let nf = T::from_usize_lossy(n);
    let tol = num_traits::Float::max(T::lit(GRADIENT_TOLERANCE), T::epsilon() * T::lit(100.0));

    let mut w = vec![T::zero(); p];
    let mut b = T::zero();
    let mut loss = logistic_loss(&w, b, z.view(), y, lambda);
    let (mut gw, mut gb) = logistic_gradient(&w, b, z.view(), y, lambda);
    let mut iterations = 0;
    while norm(&gw, gb) >= tol && iterations < MAX_NEWTON_STEPS {
        iterations += 1;
        let mut h = DMatrix::<T>::zeros(p + 1, p + 1);
        for (r, s) in z.rows().into_iter().zip(margins(&w, b, z.view())) {
            let pr = sigmoid(s);
            let c = pr * (T::one() - pr) / nf;
            for i in 0..=p {
                let xi = if i < p { r[i] } else { T::one() };
                for j in 0..=i {
                    let xj = if j < p { r[j] } else { T::one() };
                    h[(i, j)] += c * xi * xj;
                }
            }
        }
        for i in 0..=p {
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
            h[(i, i)] += if i < p { lambda } else { T::lit(1e-12) };
        }
        let g = DVector::from_iterator(p + 1, gw.iter().copied().chain(std::iter::once(gb)));
        let step = h
            .cholesky()
            .ok_or_else(|| Error::Invariant("logistic Hessian is not positive definite".into()))?
            .solve(&g);
        let mut t = T::one();
        loop {
            let w_new: Vec<T> = (0..p).map(|i| w[i] - t * step[i]).collect();
            let b_new = b - t * step[p];
            let l_new = logistic_loss(&w_new, b_new, z.view(), y, lambda);
            if l_new <= loss || t < T::lit(1e-10) {
                w = w_new;
                b = b_new;
                loss = l_new;
                break;
            }
            t = t / T::lit(2.0);
        }
        (gw, gb) = logistic_gradient(&w, b, z.view(), y, lambda);
    }
    Ok(LogisticModel { scaler, weights: w, intercept: b, lambda, iterations, gradient_norm: norm(&gw, gb) })
}

impl<T: Scalar> LogisticModel<T> {
    pub fn predict_proba(&self, x: ArrayView1<T>) -> Result<T> {
        let z = self.scaler.transform_row(x)?;
        let s = z.iter().zip(&self.weights).map(|(&a, &w)| a * w).sum::<T>() + self.intercept;
        Ok(sigmoid(s))
    }

    pub fn predict_proba_batch(&self, x: ArrayView2<T>) -> Result<Vec<T>> {
        x.rows().into_iter().map(|r| self.predict_proba(r)).collect()
    }
}
