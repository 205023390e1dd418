//! Co-occurrence matrix of quantised levels at a fixed lag and the
//! energy / entropy / correlation / inertia / local homogeneity features.
//!
//! Levels are indexed `1..=Q`; the count matrix is normalised to
//! probabilities before any feature is evaluated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_LEVELS: usize = 16;
pub const DEFAULT_LAG: usize = 1;

/// Equal-width binning of `[lo, hi]` into `levels` bins; out-of-range values clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer<T> {
    pub lo: T,
    pub hi: T,
    pub levels: usize,
}

impl<T: Scalar> Quantizer<T> {
    pub fn new(lo: T, hi: T, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::domain("quantizer needs at least one level"));
        }
        if !(lo <= hi) {
            return Err(Error::domain("quantizer bounds are reversed or NaN"));
        }
        Ok(Self { lo, hi, levels })
    }

    /// Bounds taken from the data itself.
    pub fn fit(values: impl IntoIterator<Item = T>, levels: usize) -> Result<Self> {
        let mut it = values.into_iter();
        let first = it.next().ok_or_else(|| Error::domain("cannot fit a quantizer to no data"))?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Self::new(lo, hi, levels)
    }

    /// Zero-based bin index.
    pub fn level(&self, x: T) -> usize {
        let width = self.hi - self.lo;
        if width <= T::zero() {
            return 0;
        }
        let pos = ((x - self.lo) / width * T::from_usize_lossy(self.levels)).floor();
        pos.to_usize().unwrap_or(0).min(self.levels - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix<T> {
    pub quantizer: Quantizer<T>,
    pub lag: usize,
    /// Row-major `Q x Q` pair counts.
    pub counts: Vec<u64>,
}

impl<T: Scalar> CooccurrenceMatrix<T> {
    /// Counts pairs `(x_t, x_{t+lag})` where both positions are present.
    pub fn from_dense(values: &[Option<T>], quantizer: Quantizer<T>, lag: usize) -> Result<Self> {
        if lag == 0 {
            return Err(Error::domain("co-occurrence lag must be positive"));
        }
        if values.len() <= lag {
            return Err(Error::domain(format!("series of length {} is not longer than lag {lag}", values.len())));
        }
        let q = quantizer.levels;
        let mut counts = vec![0u64; q * q];
        for (a, b) in values.iter().zip(&values[lag..]) {
            if let (Some(a), Some(b)) = (a, b) {
                counts[quantizer.level(*a) * q + quantizer.level(*b)] += 1;
            }
        }
        Ok(Self { quantizer, lag, counts })
    }

    pub fn from_series(values: &[T], quantizer: Quantizer<T>, lag: usize) -> Result<Self> {
        let dense: Vec<Option<T>> = values.iter().copied().map(Some).collect();
        Self::from_dense(&dense, quantizer, lag)
    }

    pub fn levels(&self) -> usize {
        self.quantizer.levels
    }

    pub fn pair_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn probabilities(&self) -> Vec<T> {
        let total = T::from_usize_lossy(self.pair_count() as usize);
        self.counts.iter().map(|&c| T::from_usize_lossy(c as usize) / total).collect()
    }

    pub fn features(&self) -> Result<CooccurrenceFeatures<T>> {
        if self.pair_count() == 0 {
            return Err(Error::domain("no valid pairs at this lag"));
        }
        Ok(CooccurrenceFeatures::from_probabilities(&self.probabilities(), self.levels()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceFeatures<T> {
    pub energy: T,
    /// `sum p ln p` with `0 ln 0 = 0` (non-positive).
    pub entropy: T,
    /// `None` when either marginal spread is zero.
    pub correlation: Option<T>,
    pub inertia: T,
    pub local_homogeneity: T,
}

impl<T: Scalar> CooccurrenceFeatures<T> {
    fn from_probabilities(p: &[T], q: usize) -> Self {
        let qf = T::from_usize_lossy(q);
        let level = |k: usize| T::from_usize_lossy(k + 1);
        let mut row = vec![T::zero(); q];
        let mut col = vec![T::zero(); q];
        let (mut energy, mut entropy, mut inertia, mut lh) = (T::zero(), T::zero(), T::zero(), T::zero());
        for i in 0..q {
            for j in 0..q {
                let c = p[i * q + j];
                row[i] = row[i] + c;
                col[j] = col[j] + c;
                if c > T::zero() {
                    energy = energy + c * c;
                    entropy = entropy + c * c.ln();
                    let d = level(i) - level(j);
                    inertia = inertia + d * d * c;
                    lh = lh + c / (T::one() + d * d);
                }
            }
        }
        let mu_x = (0..q).map(|i| level(i) * row[i]).sum::<T>() / qf;
        let mu_y = (0..q).map(|j| level(j) * col[j]).sum::<T>() / qf;
        let var_x = (0..q).map(|i| (level(i) - mu_x).powi(2) * row[i]).sum::<T>() / qf;
        let var_y = (0..q).map(|j| (level(j) - mu_y).powi(2) * col[j]).sum::<T>() / qf;
        let mut cov = T::zero();
        for i in 0..q {
            for j in 0..q {
                cov = cov + (level(i) - mu_x) * (level(j) - mu_y) * p[i * q + j];
            }
        }
        let denom = (var_x * var_y).sqrt();
        let correlation = (denom > T::zero()).then(|| cov / denom);
        Self { energy, entropy, correlation, inertia, local_homogeneity: lh }
    }
}

/// Features of `series` quantised over its own range.
pub fn cooccurrence_features<T: Scalar>(series: &[T], levels: usize, lag: usize) -> Result<CooccurrenceFeatures<T>> {
    if series.len() <= lag {
        return Err(Error::domain(format!("series of length {} is not longer than lag {lag}", series.len())));
    }
    let quantizer = Quantizer::fit(series.iter().copied(), levels)?;
    CooccurrenceMatrix::from_series(series, quantizer, lag)?.features()
}
