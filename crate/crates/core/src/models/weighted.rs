//! One-class SVM with learned binary sample weights, trained by
//! multi-stage relaxation: solve on the retained examples, then retain the
//! ⌈βn⌉ examples with the smallest hinge loss, until η stops changing.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::ocsvm::{kernel_expansion, prepare, solve_dual, DualSolution, OcSvmConfig, OcSvmModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_STAGES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedOcSvmConfig<T> {
    pub base: OcSvmConfig<T>,
    pub beta: T,
    pub max_stages: usize,
}

impl<T: Scalar> Default for WeightedOcSvmConfig<T> {
    fn default() -> Self {
        Self { base: OcSvmConfig::default(), beta: T::lit(0.95), max_stages: MAX_STAGES }
    }
}

impl<T: Scalar> WeightedOcSvmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.beta > T::zero() && self.beta <= T::one()) {
            return Err(Error::config(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if self.max_stages == 0 {
            return Err(Error::config("max_stages must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedOcSvmModel<T> {
    /// Model of the last accepted stage.
    pub model: OcSvmModel<T>,
    pub eta: Vec<bool>,
    pub beta: T,
    pub stages: usize,
    /// Objective after each accepted stage.
    pub objective_trace: Vec<T>,
    /// True when η reached a fixed point within the stage budget.
    pub converged: bool,
}

impl<T: Scalar> WeightedOcSvmModel<T> {
    pub fn retained(&self) -> usize {
        self.eta.iter().filter(|e| **e).count()
    }
}

/// `⌈βn⌉`, robust to `β n` landing a hair above an integer.
pub fn retained_count<T: Scalar>(beta: T, n: usize) -> usize {
    let raw = beta.to_f64_lossy() * n as f64;
    ((raw * (1.0 - 1e-12)).ceil() as usize).clamp(1, n)
}

/// `½‖ω‖² − ρ + 1/(ν eᵀη) Σ ηᵢ max(0, ρ − ωᵀφ(xᵢ))` for the stage solution.
fn stage_objective<T: Scalar>(active: &[usize], sol: &DualSolution<T>, f: &[T], nu: T) -> T {
    let norm2: T = active.iter().zip(&sol.alpha).map(|(&i, &a)| a * f[i]).sum();
    let hinge: T = active.iter().map(|&i| (sol.rho - f[i]).max(T::zero())).sum();
    norm2 / T::lit(2.0) - sol.rho + hinge / (nu * T::from_usize_lossy(active.len()))
}

pub fn train_weighted_ocsvm<T: Scalar>(x: ArrayView2<T>, config: &WeightedOcSvmConfig<T>) -> Result<WeightedOcSvmModel<T>> {
    config.validate()?;
    let p = prepare(x, &config.base)?;
    let n = x.nrows();
    let nu = config.base.nu;
    let keep = retained_count(config.beta, n);

    let mut eta = vec![true; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut sol = solve_dual(p.gram.view(), &active, nu);
    let mut f = kernel_expansion(p.gram.view(), &active, &sol.alpha);
    let mut objective = stage_objective(&active, &sol, &f, nu);
    let mut trace = vec![objective];
    let mut converged = false;

    while trace.len() < config.max_stages {
        let mut order: Vec<usize> = (0..n).collect();
        let h: Vec<T> = f.iter().map(|&fi| (sol.rho - fi).max(T::zero())).collect();
        order.sort_by(|&a, &b| h[a].partial_cmp(&h[b]).expect("finite hinge").then(a.cmp(&b)));
        let mut next = vec![false; n];
        for &i in &order[..keep] {
            next[i] = true;
        }
        if next == eta {
            converged = true;
            break;
        }
        let next_active: Vec<usize> = (0..n).filter(|&i| next[i]).collect();
        let next_sol = solve_dual(p.gram.view(), &next_active, nu);
        let next_f = kernel_expansion(p.gram.view(), &next_active, &next_sol.alpha);
        let next_objective = stage_objective(&next_active, &next_sol, &next_f, nu);
        if next_objective > objective {
            log::debug!("stage {} raised the objective; keeping the previous stage", trace.len() + 1);
            converged = true;
            break;
        }
        eta = next;
        active = next_active;
        sol = next_sol;
        f = next_f;
        objective = next_objective;
        trace.push(objective);
    }

    Ok(WeightedOcSvmModel {
        model: OcSvmModel::from_solution(&p, &active, &sol, nu),
        eta,
        beta: config.beta,
        stages: trace.len(),
        objective_trace: trace,
        converged,
    })
}
