//! K-means (k-means++ seeding, several restarts) with distance-to-centroid scores.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::sq_dist;
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel<T> {
    pub scaler: Standardizer<T>,
    pub centroids: Array2<T>,
    pub inertia: T,
}

fn nearest<T: Scalar>(centroids: &Array2<T>, p: ArrayView1<T>) -> (usize, T) {
    centroids
        .rows()
        .into_iter()
        .enumerate()
        .map(|(c, r)| (c, sq_dist(r, p)))
        .fold((0, T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus<T: Scalar>(z: &Array2<T>, k: usize, rng: &mut ChaCha8Rng) -> Array2<T> {
    let n = z.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<T> = (0..n).map(|i| sq_dist(z.row(i), z.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total = d2.iter().copied().sum::<T>().to_f64_lossy();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                target -= d.to_f64_lossy();
                if target < 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), z.row(next)));
        }
    }
    z.select(Axis(0), &chosen)
}

fn lloyd<T: Scalar>(z: &Array2<T>, mut centroids: Array2<T>) -> (Array2<T>, T) {
    let (n, k) = (z.nrows(), centroids.nrows());
    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest(&centroids, z.row(i));
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<T>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for i in 0..n {
            for (s, &v) in sums.row_mut(assign[i]).iter_mut().zip(z.row(i)) {
                *s = *s + v;
            }
            counts[assign[i]] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its own centroid.
                let far = (0..n)
                    .map(|i| (i, sq_dist(z.row(i), centroids.row(assign[i]))))
                    .fold((0, T::neg_infinity()), |b, x| if x.1 > b.1 { x } else { b })
                    .0;
                centroids.row_mut(c).assign(&z.row(far));
                assign[far] = c;
            } else {
                let cnt = T::from_usize_lossy(counts[c]);
                centroids.row_mut(c).assign(&sums.row(c).mapv(|v| v / cnt));
            }
        }
    }
    let inertia = (0..n).map(|i| nearest(&centroids, z.row(i)).1).sum();
    (centroids, inertia)
}

impl<T: Scalar> KMeansModel<T> {
    pub fn fit(x: ArrayView2<T>, k: usize, seed: u64, restarts: usize, standardize: bool) -> Result<Self> {
        if k == 0 || k > x.nrows() {
            return Err(Error::domain(format!("k = {k} clusters with {} rows", x.nrows())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("training matrix contains missing or non-finite values"));
        }
        let scaler = if standardize { Standardizer::fit(x)? } else { Standardizer::identity(x.ncols()) };
        let z = scaler.transform(x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(Array2<T>, T)> = None;
        for _ in 0..restarts.max(1) {
            let init = plus_plus(&z, k, &mut rng);
            let (c, inertia) = lloyd(&z, init);
            if best.as_ref().is_none_or(|b| inertia < b.1) {
                best = Some((c, inertia));
            }
        }
        let (centroids, inertia) = best.expect("at least one restart");
        Ok(Self { scaler, centroids, inertia })
    }

    /// Euclidean distance to the nearest centroid.
    pub fn score(&self, x: ArrayView1<T>) -> Result<T> {
        let z = self.scaler.transform_row(x)?;
        Ok(nearest(&self.centroids, z.view()).1.sqrt())
    }

    pub fn score_batch(&self, x: ArrayView2<T>) -> Result<Vec<T>> {
        x.rows().into_iter().map(|r| self.score(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        Array2::from_shape_fn((4000, 2), |(i, _)| if i < 2000 { -5.0 } else { 5.0 } + noise.sample(&mut rng))
    }

    #[test]
    fn recovers_planted_means() {
        let m = KMeansModel::fit(blobs(1).view(), 2, 7, DEFAULT_RESTARTS, false).unwrap();
        let mut c: Vec<f64> = m.centroids.column(0).to_vec();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Blob radius 0.5; tolerance 0.1 of it.
        assert!((c[0] + 5.0).abs() < 0.05 && (c[1] - 5.0).abs() < 0.05, "{c:?}");
        let at = m.centroids.row(0).to_owned();
        assert_eq!(m.score(at.view()).unwrap(), 0.0);
    }

    #[test]
    fn seeded_determinism() {
        let a = KMeansModel::fit(blobs(2).view(), 3, 11, 4, true).unwrap();
        let b = KMeansModel::fit(blobs(2).view(), 3, 11, 4, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn more_clusters_than_distinct_points() {
        let x = ndarray::array![[0.0f64], [0.0], [0.0], [1.0]];
        let m = KMeansModel::fit(x.view(), 3, 0, 2, false).unwrap();
        assert!(m.centroids.iter().all(|v| v.is_finite()));
    }
}
