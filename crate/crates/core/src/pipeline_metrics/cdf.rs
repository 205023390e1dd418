//! Empirical step CDFs with nearest-rank percentiles.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub x: f64,
    pub cum_fraction: f64,
}

/// Right-continuous empirical distribution of a non-empty sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    points: Vec<CdfPoint>,
}

impl EmpiricalCdf {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("CDF of an empty sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("CDF sample contains non-finite values"));
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mut points: Vec<CdfPoint> = Vec::new();
        for (i, &x) in values.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match points.last_mut() {
                Some(p) if p.x == x => p.cum_fraction = frac,
                _ => points.push(CdfPoint { x, cum_fraction: frac }),
            }
        }
        if let Some(last) = points.last_mut() {
            last.cum_fraction = 1.0;
        }
        Ok(Self { sorted: values, points })
    }

    pub fn points(&self) -> &[CdfPoint] {
        &self.points
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of the sample `<= x`.
    pub fn at(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }

    /// Middle value, or the mean of the two middle values for even sizes.
    pub fn median(&self) -> f64 {
        median_sorted(&self.sorted)
    }

    /// Nearest-rank percentile, `p` in `(0, 100]`.
    pub fn percentile(&self, p: f64) -> f64 {
        nearest_rank(&self.sorted, p)
    }

    /// `x,cum_fraction` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "cum_fraction"])?;
        for p in &self.points {
            wtr.write_record([p.x.to_string(), p.cum_fraction.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub(crate) fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}
