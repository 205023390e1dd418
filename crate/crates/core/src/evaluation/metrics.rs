//! Confusion counts, ratio metrics, ROC/PR areas and operating points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionCounts {
    pub fn from_predictions(labels: &[bool], predicted: &[bool]) -> Result<Self> {
        if labels.len() != predicted.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), found: predicted.len() });
        }
        let mut c = Self::default();
        for (&y, &p) in labels.iter().zip(predicted) {
            match (y, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, fp: self.fp + o.fp, tn: self.tn + o.tn, fn_: self.fn_ + o.fn_ }
    }
}

/// Ratio metrics are `None` when their denominator is zero; AUCs when a class is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub accuracy: Option<f64>,
    pub auc_roc: Option<f64>,
    pub auc_pr: Option<f64>,
}

impl MetricsReport {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        Self {
            counts,
            sensitivity: counts.sensitivity(),
            specificity: counts.specificity(),
            ppv: counts.ppv(),
            accuracy: counts.accuracy(),
            auc_roc: None,
            auc_pr: None,
        }
    }

    /// Counts from thresholded predictions, areas from the raw scores (higher = positive).
    pub fn evaluate(labels: &[bool], predicted: &[bool], scores: &[f64]) -> Result<Self> {
        let mut r = Self::from_counts(ConfusionCounts::from_predictions(labels, predicted)?);
        r.auc_roc = roc_auc(labels, scores).ok();
        r.auc_pr = pr_auc(labels, scores).ok();
        Ok(r)
    }

    /// True when every ratio equals the value recomputed from the counts, bit for bit.
    pub fn recomputes_exactly(&self) -> bool {
        let same = |a: Option<f64>, b: Option<f64>| a.map(f64::to_bits) == b.map(f64::to_bits);
        same(self.sensitivity, self.counts.sensitivity())
            && same(self.specificity, self.counts.specificity())
            && same(self.ppv, self.counts.ppv())
            && same(self.accuracy, self.counts.accuracy())
    }
}

pub fn confusion_metrics(labels: &[bool], predicted: &[bool]) -> Result<MetricsReport> {
    Ok(MetricsReport::from_counts(ConfusionCounts::from_predictions(labels, predicted)?))
}

fn check_scored(labels: &[bool], scores: &[f64]) -> Result<(usize, usize)> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("scores contain NaN"));
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::domain("area under curve needs both classes"));
    }
    Ok((pos, neg))
}

/// Indices sorted by descending score.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("no NaN").then(a.cmp(&b)));
    idx
}

/// One operating point: predict positive iff `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub counts: ConfusionCounts,
}

/// Every distinct operating point, from the empty prediction (threshold `+inf`) down to all-positive.
pub fn threshold_sweep(labels: &[bool], scores: &[f64]) -> Result<Vec<CurvePoint>> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    let pos = labels.iter().filter(|&&y| y).count() as u64;
    let neg = labels.len() as u64 - pos;
    let mut c = ConfusionCounts { tp: 0, fp: 0, tn: neg, fn_: pos };
    let mut out = vec![CurvePoint { threshold: f64::INFINITY, counts: c }];
    let order = descending(scores);
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]] {
                c.tp += 1;
                c.fn_ -= 1;
            } else {
                c.fp += 1;
                c.tn -= 1;
            }
            k += 1;
        }
        out.push(CurvePoint { threshold: t, counts: c });
    }
    Ok(out)
}

/// Trapezoidal area under the ROC curve (tied scores contribute half).
pub fn roc_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check_scored(labels, scores)?;
    let sweep = threshold_sweep(labels, scores)?;
    let mut twice_area = 0u128;
    for w in sweep.windows(2) {
        let (a, b) = (w[0].counts, w[1].counts);
        twice_area += u128::from(b.fp - a.fp) * u128::from(a.tp + b.tp);
    }
    Ok(twice_area as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Average precision: `Σ (R_k − R_{k−1}) P_k` over distinct thresholds.
pub fn pr_auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    let (pos, _) = check_scored(labels, scores)?;
    let sweep = threshold_sweep(labels, scores)?;
    let mut ap = 0.0;
    for w in sweep.windows(2) {
        let (a, b) = (w[0].counts, w[1].counts);
        if b.tp > a.tp {
            ap += (b.tp - a.tp) as f64 / pos as f64 * (b.tp as f64 / (b.tp + b.fp) as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub report: MetricsReport,
    /// False when no threshold reaches the requested sensitivity.
    pub target_met: bool,
}

/// Most specific threshold whose sensitivity reaches `target`.
pub fn fixed_sensitivity_operating_point(labels: &[bool], scores: &[f64], target: f64) -> Result<OperatingPoint> {
    if !labels.iter().any(|&y| y) {
        return Err(Error::domain("fixed-sensitivity point needs positive examples"));
    }
    let sweep = threshold_sweep(labels, scores)?;
    let hit = sweep.iter().find(|p| p.counts.sensitivity().unwrap_or(0.0) >= target);
    let (point, target_met) = match hit {
        Some(p) => (*p, true),
        None => {
            let best = sweep
                .iter()
                .min_by(|a, b| {
                    let da = (target - a.counts.sensitivity().unwrap_or(0.0)).abs();
                    let db = (target - b.counts.sensitivity().unwrap_or(0.0)).abs();
                    da.partial_cmp(&db).expect("finite")
                })
                .expect("sweep is never empty");
            (*best, false)
        }
    };
    let mut report = MetricsReport::from_counts(point.counts);
    report.auc_roc = roc_auc(labels, scores).ok();
    report.auc_pr = pr_auc(labels, scores).ok();
    Ok(OperatingPoint { threshold: point.threshold, report, target_met })
}

/// Threshold with the highest accuracy; the larger threshold wins ties.
pub fn best_accuracy_operating_point(labels: &[bool], scores: &[f64]) -> Result<OperatingPoint> {
    let sweep = threshold_sweep(labels, scores)?;
    let mut best = sweep[0];
    for p in &sweep[1..] {
        if p.counts.tp + p.counts.tn > best.counts.tp + best.counts.tn {
            best = *p;
        }
    }
    let mut report = MetricsReport::from_counts(best.counts);
    report.auc_roc = roc_auc(labels, scores).ok();
    report.auc_pr = pr_auc(labels, scores).ok();
    Ok(OperatingPoint { threshold: best.threshold, report, target_met: true })
}

/// Published ratios to check for arithmetic consistency; `None` leaves a ratio unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedRatios {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub accuracy: Option<f64>,
    /// Digits after the decimal point in the published values.
    pub decimals: u32,
}

impl PublishedRatios {
    pub fn matches(&self, c: &ConfusionCounts) -> bool {
        let scale = 10f64.powi(self.decimals as i32);
        let rounds_to = |want: Option<f64>, got: Option<f64>| match (want, got) {
            (None, _) => true,
            (Some(w), Some(g)) => ((g * scale).round() - (w * scale).round()).abs() < 0.5,
            (Some(_), None) => false,
        };
        rounds_to(self.sensitivity, c.sensitivity())
            && rounds_to(self.specificity, c.specificity())
            && rounds_to(self.ppv, c.ppv())
            && rounds_to(self.accuracy, c.accuracy())
    }
}

/// Every confusion table with exactly `total` examples whose ratios round to `published`.
pub fn consistent_counts(published: &PublishedRatios, total: u64) -> Vec<ConfusionCounts> {
    let mut out = Vec::new();
    for pos in 0..=total {
        let neg = total - pos;
        for tp in 0..=pos {
            let partial = ConfusionCounts { tp, fn_: pos - tp, tn: 0, fp: 0 };
            let sens_only = PublishedRatios { specificity: None, ppv: None, accuracy: None, ..*published };
            if published.sensitivity.is_some() && !sens_only.matches(&partial) {
                continue;
            }
            for tn in 0..=neg {
                let c = ConfusionCounts { tp, fn_: pos - tp, tn, fp: neg - tn };
                if published.matches(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ratio_formulas() {
        let c = ConfusionCounts { tp: 2, fn_: 0, tn: 3, fp: 1 };
        assert_eq!(c.sensitivity(), Some(1.0));
        assert_eq!(c.specificity(), Some(0.75));
        assert_eq!(c.ppv(), Some(2.0 / 3.0));
        assert_eq!(c.accuracy(), Some(5.0 / 6.0));
        assert!(MetricsReport::from_counts(c).recomputes_exactly());
        assert_eq!(ConfusionCounts::default().ppv(), None);
    }

    #[test]
    fn perfect_and_inverted_scores() {
        let y = [false, false, true, true];
        assert_eq!(roc_auc(&y, &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(pr_auc(&y, &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(roc_auc(&y, &[0.9, 0.8, 0.2, 0.1]).unwrap(), 0.0);
        assert_eq!(roc_auc(&y, &[0.5; 4]).unwrap(), 0.5);
        assert!(roc_auc(&[true, true], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn random_scores_give_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y: Vec<bool> = (0..10_000).map(|i| i % 2 == 0).collect();
        let s: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        assert!((roc_auc(&y, &s).unwrap() - 0.5).abs() < 0.02);
    }

    #[test]
    fn operating_points() {
        let y = [false, false, false, true, true];
        let s = [0.1, 0.2, 0.3, 0.7, 0.9];
        let op = fixed_sensitivity_operating_point(&y, &s, 0.95).unwrap();
        assert_eq!(op.threshold, 0.7);
        assert_eq!(op.report.sensitivity, Some(1.0));
        assert_eq!(op.report.specificity, Some(1.0));
        let zero = fixed_sensitivity_operating_point(&y, &s, 0.0).unwrap();
        assert!(zero.threshold > 0.9);
        assert_eq!(zero.report.specificity, Some(1.0));
        let best = best_accuracy_operating_point(&y, &s).unwrap();
        assert_eq!(best.report.accuracy, Some(1.0));
    }

    #[test]
    fn consistency_search_finds_a_known_table() {
        let c = ConfusionCounts { tp: 5, fn_: 2, tn: 15, fp: 3 };
        let published = PublishedRatios {
            sensitivity: c.sensitivity(),
            specificity: c.specificity(),
            ppv: c.ppv(),
            accuracy: c.accuracy(),
            decimals: 4,
        };
        assert_eq!(consistent_counts(&published, 25), vec![c]);
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_map(raw in prop::collection::vec((any::<bool>(), -5.0f64..5.0), 4..80)) {
            let y: Vec<bool> = raw.iter().map(|r| r.0).collect();
            prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
            let s: Vec<f64> = raw.iter().map(|r| (r.1 * 4.0).round() / 4.0).collect();
            let t: Vec<f64> = s.iter().map(|v| (v * 0.7).exp() + 3.0).collect();
            prop_assert_eq!(roc_auc(&y, &s).unwrap(), roc_auc(&y, &t).unwrap());
            prop_assert_eq!(pr_auc(&y, &s).unwrap(), pr_auc(&y, &t).unwrap());
        }

        #[test]
        fn auc_matches_pairwise_count(raw in prop::collection::vec((any::<bool>(), 0u8..6), 2..60)) {
            let y: Vec<bool> = raw.iter().map(|r| r.0).collect();
            prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
            let s: Vec<f64> = raw.iter().map(|r| f64::from(r.1)).collect();
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..y.len() { for j in 0..y.len() {
                if y[i] && !y[j] {
                    den += 1.0;
                    num += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }}
            prop_assert!((roc_auc(&y, &s).unwrap() - num / den).abs() < 1e-12);
        }
    }
}
