//! Averages over repeats and tabular output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use crate::error::Result;

/// Mean and sample standard deviation over the repeats where a metric is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let xs: Vec<f64> = values.into_iter().flatten().collect();
        let n = xs.len();
        if n == 0 {
            return Self { mean: None, std: None, n };
        }
        // Shifted by the first value: a constant column averages to itself exactly.
        let mean = xs[0] + xs.iter().map(|x| x - xs[0]).sum::<f64>() / n as f64;
        let std = (n >= 2).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Self { mean: Some(mean), std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedMetrics {
    pub repeats: usize,
    pub auc_roc: MeanStd,
    pub auc_pr: MeanStd,
    pub specificity: MeanStd,
    pub sensitivity: MeanStd,
    pub ppv: MeanStd,
    pub accuracy: MeanStd,
}

impl AveragedMetrics {
    pub fn from_reports(reports: &[MetricsReport]) -> Self {
        Self {
            repeats: reports.len(),
            auc_roc: MeanStd::of(reports.iter().map(|r| r.auc_roc)),
            auc_pr: MeanStd::of(reports.iter().map(|r| r.auc_pr)),
            specificity: MeanStd::of(reports.iter().map(|r| r.specificity)),
            sensitivity: MeanStd::of(reports.iter().map(|r| r.sensitivity)),
            ppv: MeanStd::of(reports.iter().map(|r| r.ppv)),
            accuracy: MeanStd::of(reports.iter().map(|r| r.accuracy)),
        }
    }

    fn columns(&self) -> [(&'static str, MeanStd); 6] {
        [
            ("auc_roc", self.auc_roc),
            ("auc_pr", self.auc_pr),
            ("specificity", self.specificity),
            ("sensitivity", self.sensitivity),
            ("ppv", self.ppv),
            ("accuracy", self.accuracy),
        ]
    }
}

/// One labelled row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub keys: Vec<(String, String)>,
    pub metrics: AveragedMetrics,
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// CSV: key columns, then `<metric>` and `<metric>_std` for each metric, then `repeats`.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        let mut header: Vec<String> = first.keys.iter().map(|(k, _)| k.clone()).collect();
        for (name, _) in first.metrics.columns() {
            header.push(name.to_string());
            header.push(format!("{name}_std"));
        }
        header.push("repeats".into());
        w.write_record(&header)?;
    }
    for row in rows {
        let mut rec: Vec<String> = row.keys.iter().map(|(_, v)| v.clone()).collect();
        for (_, ms) in row.metrics.columns() {
            rec.push(fmt(ms.mean));
            rec.push(fmt(ms.std));
        }
        rec.push(row.metrics.repeats.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
