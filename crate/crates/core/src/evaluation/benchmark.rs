//! Feature-space early-warning benchmark with outliers planted among the normals.
//!
//! Normal days are Gaussian around the origin. A fraction of the days labelled
//! normal are contamination scattered around the same centre as the true
//! deterioration days, so a detector that fits its training set too faithfully
//! learns the anomaly region as normal.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, ModalityTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub n_normals: usize,
    pub n_anomalies: usize,
    /// Fraction of the normal-labelled days that are planted outliers.
    pub contamination: f64,
    pub dims: usize,
    /// Leading dimensions in which deterioration days differ from normal days.
    pub signal_dims: usize,
    /// Distance of the anomaly region centre from the origin, in normal standard deviations.
    pub shift: f64,
    /// Standard deviation of the deterioration days around the anomaly centre.
    pub spread: f64,
    /// Standard deviation of the planted outliers.
    pub contamination_spread: f64,
    /// Position of the planted outliers' centre along the way to the anomaly centre (1 = same centre).
    pub contamination_offset: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            n_normals: 427,
            n_anomalies: 11,
            contamination: 0.05,
            dims: 50,
            signal_dims: 8,
            shift: 5.5,
            spread: 0.5,
            contamination_spread: 0.75,
            contamination_offset: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub matrix: FeatureMatrix,
    pub labels: Vec<bool>,
    /// Rows that are labelled normal but drawn from the anomaly region.
    pub planted: Vec<usize>,
}

pub fn contaminated_benchmark(config: &BenchmarkConfig) -> Result<Benchmark> {
    if config.dims == 0 || config.n_normals == 0 || config.n_anomalies == 0 {
        return Err(Error::config("benchmark needs dims, normals and anomalies"));
    }
    if !(0.0..1.0).contains(&config.contamination) {
        return Err(Error::config("contamination must lie in [0,1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = config.dims;
    let n_planted = (config.n_normals as f64 * config.contamination).round() as usize;
    let n = config.n_normals + config.n_anomalies;
    let centre: Vec<f64> = {
        let q = config.signal_dims.clamp(1, p);
        let raw: Vec<f64> = (0..p).map(|j| if j < q { StandardNormal.sample(&mut rng) } else { 0.0 }).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        raw.iter().map(|v| v / norm * config.shift).collect()
    };
    let mut values = Array2::zeros((n, p));
    let mut labels = vec![false; n];
    let mut planted = Vec::with_capacity(n_planted);
    for i in 0..n {
        let outlier = i >= config.n_normals || i < n_planted;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            let signal = j < config.signal_dims;
            values[[i, j]] = if i >= config.n_normals && signal {
                centre[j] + config.spread * z
            } else if outlier && signal {
                config.contamination_offset * centre[j] + config.contamination_spread * z
            } else {
                z
            };
        }
        if i >= config.n_normals {
            labels[i] = true;
        } else if outlier {
            planted.push(i);
        }
    }
    // Interleave so planted rows are not all at the front.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let values = values.select(ndarray::Axis(0), &order);
    let labels: Vec<bool> = order.iter().map(|&i| labels[i]).collect();
    let mut planted: Vec<usize> = order.iter().enumerate().filter(|(_, o)| planted.contains(o)).map(|(i, _)| i).collect();
    planted.sort_unstable();
    let matrix = FeatureMatrix {
        names: (0..p).map(|j| format!("x{j}")).collect(),
        modalities: (0..p).map(|j| ModalityTag::ALL[j % 3]).collect(),
        ids: (0..n).map(|i| format!("day{i:04}")).collect(),
        missing: Array2::from_elem((n, p), false),
        values,
    };
    Ok(Benchmark { matrix, labels, planted })
}
