//! Detrended fluctuation analysis with linear (order-1) detrending over
//! non-overlapping segments; a trailing partial segment is discarded.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MIN_WINDOW: usize = 4;

/// Root-mean-square residual of segment-wise linear fits to the integrated,
/// mean-centred series, for segment length `window`.
pub fn dfa_fluctuation<T: Scalar>(series: &[T], window: usize) -> Result<T> {
    if window < MIN_WINDOW {
        return Err(Error::domain(format!("DFA window {window} is below {MIN_WINDOW}")));
    }
    if series.len() < 2 * window {
        return Err(Error::domain(format!(
            "DFA window {window} needs at least {} points, got {}",
            2 * window,
            series.len()
        )));
    }
    let n = T::from_usize_lossy(series.len());
    let mean = series.iter().copied().sum::<T>() / n;
    let mut acc = T::zero();
    let profile: Vec<T> = series
        .iter()
        .map(|&x| {
            acc = acc + (x - mean);
            acc
        })
        .collect();

    let w = T::from_usize_lossy(window);
    let t_mean = (w - T::one()) / T::lit(2.0);
    let s_tt = w * (w * w - T::one()) / T::lit(12.0);
    let segments = series.len() / window;
    let mut rss = T::zero();
    for seg in profile.chunks_exact(window).take(segments) {
        let y_mean = seg.iter().copied().sum::<T>() / w;
        let s_ty = seg
            .iter()
            .enumerate()
            .map(|(k, &y)| (T::from_usize_lossy(k) - t_mean) * (y - y_mean))
            .sum::<T>();
        let slope = s_ty / s_tt;
        for (k, &y) in seg.iter().enumerate() {
            let fit = y_mean + slope * (T::from_usize_lossy(k) - t_mean);
            let r = y - fit;
            rss = rss + r * r;
        }
    }
    Ok((rss / T::from_usize_lossy(segments * window)).sqrt())
}

/// Least-squares slope of `ln F(n)` against `ln n`.
pub fn dfa_exponent<T: Scalar>(series: &[T], windows: &[usize]) -> Result<T> {
    if windows.len() < 2 {
        return Err(Error::domain("DFA exponent needs at least two windows"));
    }
    let mut pts = Vec::with_capacity(windows.len());
    for &n in windows {
        let f = dfa_fluctuation(series, n)?;
        if f <= T::zero() {
            return Err(Error::degenerate("zero fluctuation; scaling exponent undefined"));
        }
        pts.push((T::from_usize_lossy(n).ln(), f.ln()));
    }
    let k = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / k;
    let my = pts.iter().map(|p| p.1).sum::<T>() / k;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_is_exactly_zero() {
        for n in [4, 10, 60] {
            assert_eq!(dfa_fluctuation(&[7.0f64; 200], n).unwrap(), 0.0);
        }
    }

    #[test]
    fn linear_ramp_profile_is_fit_exactly() {
        // A linear input integrates to a quadratic; detrending leaves a small residual
        // but a constant step input integrates to a line and leaves none.
        let xs: Vec<f64> = (0..100).map(|i| if i < 50 { 1.0 } else { -1.0 }).collect();
        let f = dfa_fluctuation(&xs, 10).unwrap();
        assert!(f < 1e-12, "{f}");
    }

    #[test]
    fn preconditions() {
        assert!(dfa_fluctuation(&[1.0f64; 10], 3).is_err());
        assert!(dfa_fluctuation(&[1.0f64; 15], 8).is_err());
        assert!(dfa_fluctuation(&[1.0f64; 16], 8).is_ok());
    }

    proptest! {
        #[test]
        fn scales_linearly(xs in prop::collection::vec(-10.0f64..10.0, 40..200), c in 0.01f64..100.0) {
            let a = dfa_fluctuation(&xs, 8).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let b = dfa_fluctuation(&scaled, 8).unwrap();
            prop_assert!((b - c * a).abs() <= 1e-9 * (c * a).max(1e-12));
        }
    }
}
