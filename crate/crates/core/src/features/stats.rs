//! First-order statistics: mean, population standard deviation, min, max,
//! and the (N - 1)-normalised skewness and excess kurtosis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderStats<T> {
    pub mean: T,
    pub min: T,
    pub max: T,
    /// `sqrt(sum((x - mean)^2) / N)`; `None` when `N < 2`.
    pub std: Option<T>,
    /// `sum((x - mean)^3) / ((N - 1) std^3)`; `None` when `N < 3` or `std == 0`.
    pub skewness: Option<T>,
    /// `sum((x - mean)^4) / ((N - 1) std^4) - 3`; same availability as skewness.
    pub kurtosis: Option<T>,
}

pub fn first_order_stats<T: Scalar>(xs: &[T]) -> Result<FirstOrderStats<T>> {
    if xs.is_empty() {
        return Err(Error::domain("statistics of an empty series"));
    }
    let n = T::from_usize_lossy(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let (mut min, mut max) = (xs[0], xs[0]);
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    for &x in xs {
        min = min.min(x);
        max = max.max(x);
        let d = x - mean;
        let d2 = d * d;
        m2 = m2 + d2;
        m3 = m3 + d2 * d;
        m4 = m4 + d2 * d2;
    }
    let std = (xs.len() >= 2).then(|| (m2 / n).sqrt());
    let (skewness, kurtosis) = match std {
        Some(s) if xs.len() >= 3 && s > T::zero() => {
            let nm1 = n - T::one();
            let s2 = s * s;
            (Some(m3 / (nm1 * s2 * s)), Some(m4 / (nm1 * s2 * s2) - T::lit(3.0)))
        }
        _ => (None, None),
    };
    Ok(FirstOrderStats { mean, min, max, std, skewness, kurtosis })
}
