//! Sequential forward feature selection scored by leave-one-out accuracy.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::models::{knn_vote, train_logistic, LogisticConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfsResult {
    /// Accepted column indices in order of acceptance.
    pub selected: Vec<usize>,
    pub names: Vec<String>,
    /// Leave-one-out accuracy after each acceptance.
    pub accuracy_trace: Vec<f64>,
    /// Leave-one-out accuracy of the majority vote, the score of the empty set.
    pub baseline_accuracy: f64,
}

/// Correct leave-one-out predictions of the majority class of the remaining rows (ties positive).
pub fn loo_majority_correct(labels: &[bool]) -> usize {
    let pos = labels.iter().filter(|&&y| y).count();
    let n = labels.len();
    labels
        .iter()
        .filter(|&&y| {
            let p = pos - usize::from(y);
            let predicted = 2 * p >= n - 1;
            predicted == y
        })
        .count()
}

/// Greedy forward selection.
///
/// `loo_correct(subset)` counts correct leave-one-out predictions. A candidate is
/// accepted only when it strictly improves the count; equal candidates resolve
/// to the lexicographically smallest name.
pub fn sequential_forward_selection<F>(names: &[String], labels: &[bool], loo_correct: F) -> SfsResult
where
    F: Fn(&[usize]) -> usize,
{
    let n = labels.len().max(1) as f64;
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let baseline = loo_majority_correct(labels);
    let mut current = baseline;
    let mut selected: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for &c in order.iter().filter(|c| !selected.contains(c)) {
            let mut trial = selected.clone();
            trial.push(c);
            let score = loo_correct(&trial);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((c, score));
            }
        }
        match best {
            Some((c, score)) if score > current => {
                selected.push(c);
                current = score;
                trace.push(score as f64 / n);
            }
            _ => break,
        }
    }
    SfsResult {
        names: selected.iter().map(|&c| names[c].clone()).collect(),
        selected,
        accuracy_trace: trace,
        baseline_accuracy: baseline as f64 / n,
    }
}

/// Per-feature squared differences, so a subset's squared distance is a sum of matrices.
fn per_feature_sq_dists(x: ArrayView2<f64>) -> Vec<Array2<f64>> {
    let n = x.nrows();
    x.axis_iter(Axis(1))
        .map(|col| Array2::from_shape_fn((n, n), |(i, j)| (col[i] - col[j]).powi(2)))
        .collect()
}

/// Forward selection for a K-nearest-neighbour classifier on already standardised data.
pub fn sfs_knn(x: ArrayView2<f64>, labels: &[bool], names: &[String], k: usize) -> SfsResult {
    let d = per_feature_sq_dists(x);
    let n = labels.len();
    sequential_forward_selection(names, labels, |subset| {
        let mut total = Array2::<f64>::zeros((n, n));
        for &f in subset {
            total += &d[f];
        }
        let mut correct = 0;
        let mut dist = Vec::with_capacity(n - 1);
        let mut lab = Vec::with_capacity(n - 1);
        for i in 0..n {
            dist.clear();
            lab.clear();
            for j in (0..n).filter(|&j| j != i) {
                dist.push(total[[i, j]]);
                lab.push(labels[j]);
            }
            if knn_vote(&dist, &lab, k.min(n - 1)).label == labels[i] {
                correct += 1;
            }
        }
        correct
    })
}

/// Forward selection for logistic regression, refitting once per held-out row.
pub fn sfs_logistic(x: ArrayView2<f64>, labels: &[bool], names: &[String], lambda: f64) -> SfsResult {
    let n = labels.len();
    let config = LogisticConfig { lambda, standardize: false };
    sequential_forward_selection(names, labels, |subset| {
        let xs = x.select(Axis(1), subset);
        (0..n)
            .filter(|&i| {
                let rows: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let y: Vec<bool> = rows.iter().map(|&j| labels[j]).collect();
                match train_logistic(xs.select(Axis(0), &rows).view(), &y, &config) {
                    Ok(m) => (m.predict_proba(xs.row(i)).map(|p| p >= 0.5).unwrap_or(false)) == labels[i],
                    // A single-class remainder predicts that class.
                    Err(_) => y.first().copied() == Some(labels[i]),
                }
            })
            .count()
    })
}
