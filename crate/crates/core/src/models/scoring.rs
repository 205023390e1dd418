//! Thresholds for "higher is more anomalous" scores.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Training-score quantile at `1 - contamination`; scores strictly above it are anomalies.
pub fn calibrate_threshold<T: Scalar>(train_scores: &[T], contamination: T) -> Result<T> {
    if train_scores.is_empty() {
        return Err(Error::domain("no training scores to calibrate on"));
    }
    if !(contamination >= T::zero() && contamination < T::one()) {
        return Err(Error::config("contamination must lie in [0, 1)"));
    }
    let mut sorted = train_scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len();
    let rank = ((T::one() - contamination) * T::from_usize_lossy(n)).ceil().to_usize().unwrap_or(n);
    Ok(sorted[rank.clamp(1, n) - 1])
}
