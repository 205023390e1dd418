//! Per-window feature vectors and the cohort feature matrix.

use std::path::Path;

use chrono::{Duration, NaiveDate};
use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activity::activity_day;
use super::catalog::{FeatureCatalog, ModalityTag, SLEEP_SUMMARY_FIELDS};
use super::cooccurrence::{CooccurrenceMatrix, Quantizer, DEFAULT_LAG, DEFAULT_LEVELS};
use super::dfa::dfa_fluctuation;
use super::stats::first_order_stats;
use crate::error::{Error, Result};
use crate::ingest::{MinuteSpan, PatientRecord, SleepEpisodeSummary};

pub const HR_DFA_WINDOW: usize = 10;
pub const SLEEP_DFA_WINDOWS: [usize; 3] = [60, 120, 360];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub cooccurrence_levels: usize,
    pub cooccurrence_lag: usize,
    /// Fixed heart-rate quantisation range; `None` quantises each window over its own range.
    pub hr_bounds: Option<(f64, f64)>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { cooccurrence_levels: DEFAULT_LEVELS, cooccurrence_lag: DEFAULT_LAG, hr_bounds: None }
    }
}

impl FeatureConfig {
    /// Sets the heart-rate quantisation range to the min/max over `records`.
    pub fn fit_hr_bounds(mut self, records: &[PatientRecord]) -> Self {
        let mut it = records.iter().flat_map(|r| r.heart_rate.samples().iter().map(|s| s.value));
        if let Some(first) = it.next() {
            self.hr_bounds = Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))));
        }
        self
    }
}

/// One example: values in catalog order, `NaN` where missing until imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub example_id: String,
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl FeatureVector {
    fn new(example_id: String, n: usize) -> Self {
        Self { example_id, values: vec![f64::NAN; n], missing: vec![true; n] }
    }

    /// Non-finite values are treated as missing.
    pub fn from_values(example_id: impl Into<String>, values: Vec<f64>) -> Self {
        let missing = values.iter().map(|v| !v.is_finite()).collect();
        let values = values.into_iter().map(|v| if v.is_finite() { v } else { f64::NAN }).collect();
        Self { example_id: example_id.into(), values, missing }
    }

    fn set(&mut self, idx: usize, value: Option<f64>) {
        if let Some(v) = value.filter(|v| v.is_finite()) {
            self.values[idx] = v;
            self.missing[idx] = false;
        }
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }
}

fn min_max_mean(xs: &[f64]) -> [Option<f64>; 3] {
    if xs.is_empty() {
        return [None; 3];
    }
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [Some(min), Some(max), Some(xs.iter().sum::<f64>() / xs.len() as f64)]
}

fn summary_field(s: &SleepEpisodeSummary, field: &str) -> f64 {
    f64::from(match field {
        "time_in_bed" => s.time_in_bed,
        "min_to_fall_asleep" => s.min_to_fall_asleep,
        "min_asleep" => s.min_asleep,
        "min_awake" => s.min_awake,
        "min_after_wakeup" => s.min_after_wakeup,
        "awake_count" => s.awake_count,
        "restless_count" => s.restless_count,
        "restless_duration" => s.restless_duration,
        _ => unreachable!("unknown sleep-summary field {field}"),
    })
}

/// Computes every catalog feature over days `first..=last` of `record`.
pub fn assemble_daily_features(
    record: &PatientRecord,
    first: NaiveDate,
    last: NaiveDate,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    if first > last || first < record.monitoring_start || last > record.monitoring_end {
        return Err(Error::domain(format!(
            "{}: window {first}..={last} is outside monitoring {}..={}",
            record.patient_id, record.monitoring_start, record.monitoring_end
        )));
    }
    let catalog = FeatureCatalog::standard();
    let mut fv = FeatureVector::new(format!("{}:{first}:{last}", record.patient_id), catalog.len());
    let idx = |name: &str| catalog.index_of(name).expect("catalog feature");
    let span = MinuteSpan::days(first, last);

    // Steps inside awake windows.
    let days: Vec<_> = (0..=(last - first).num_days())
        .filter_map(|i| activity_day(&record.steps, first + Duration::days(i)))
        .collect();
    if !days.is_empty() {
        let totals: Vec<f64> = days.iter().map(|d| d.total_steps).collect();
        let [lo, hi, mean] = min_max_mean(&totals);
        fv.set(idx("daily_step_min"), lo);
        fv.set(idx("daily_step_max"), hi);
        fv.set(idx("daily_step_mean"), mean);
        let active: i64 = days.iter().map(|d| d.active_minutes).sum();
        let observed: i64 = days.iter().map(|d| d.observed_minutes()).sum();
        fv.set(idx("activity_quality"), (observed > 0).then(|| active as f64 / observed as f64));
        let bout_count: usize = days.iter().map(|d| d.bouts.len()).sum();
        fv.set(idx("daily_sedentary_bout_count"), Some(bout_count as f64 / days.len() as f64));
        let durations: Vec<f64> = days.iter().flat_map(|d| d.bouts.iter().map(|b| b.duration as f64)).collect();
        let [lo, hi, mean] = min_max_mean(&durations);
        fv.set(idx("sedentary_bout_min"), lo);
        fv.set(idx("sedentary_bout_max"), hi);
        fv.set(idx("sedentary_per_bout"), mean);
    }

    let hr = record.heart_rate.values_in(span);
    if let Ok(s) = first_order_stats(&hr) {
        fv.set(idx("hr_mean"), Some(s.mean));
        fv.set(idx("hr_min"), Some(s.min));
        fv.set(idx("hr_max"), Some(s.max));
        fv.set(idx("hr_std"), s.std);
        fv.set(idx("hr_skewness"), s.skewness);
        fv.set(idx("hr_kurtosis"), s.kurtosis);
        let quantizer = match config.hr_bounds {
            Some((lo, hi)) => Quantizer::new(lo, hi, config.cooccurrence_levels),
            None => Quantizer::fit(hr.iter().copied(), config.cooccurrence_levels),
        };
        let co = quantizer
            .and_then(|q| CooccurrenceMatrix::from_dense(&record.heart_rate.dense(span), q, config.cooccurrence_lag))
            .and_then(|m| m.features());
        if let Ok(c) = co {
            fv.set(idx("hr_energy"), Some(c.energy));
            fv.set(idx("hr_entropy"), Some(c.entropy));
            fv.set(idx("hr_correlation"), c.correlation);
            fv.set(idx("hr_inertia"), Some(c.inertia));
            fv.set(idx("hr_local_homogeneity"), Some(c.local_homogeneity));
        }
        fv.set(idx("dfa_hr_10"), dfa_fluctuation(&hr, HR_DFA_WINDOW).ok());
    }

    let sleep = record.sleep_status.values_in(span);
    if let Ok(s) = first_order_stats(&sleep) {
        fv.set(idx("sleep_status_skewness"), s.skewness);
        fv.set(idx("sleep_status_kurtosis"), s.kurtosis);
    }
    for n in SLEEP_DFA_WINDOWS {
        fv.set(idx(&format!("dfa_sleep_{n}")), dfa_fluctuation(&sleep, n).ok());
    }

    let episodes: Vec<&SleepEpisodeSummary> =
        record.sleep_summaries.iter().filter(|s| s.date >= first && s.date <= last).collect();
    let efficiencies: Vec<f64> = episodes
        .iter()
        .filter(|s| s.time_in_bed > 0)
        .map(|s| f64::from(s.min_asleep) / f64::from(s.time_in_bed))
        .collect();
    fv.set(idx("sleep_efficiency"), min_max_mean(&efficiencies)[2]);
    for field in SLEEP_SUMMARY_FIELDS {
        let xs: Vec<f64> = episodes.iter().map(|s| summary_field(s, field)).collect();
        for (stat, v) in ["min", "max", "mean"].into_iter().zip(min_max_mean(&xs)) {
            fv.set(idx(&format!("{field}_{stat}")), v);
        }
    }
    Ok(fv)
}

/// Catalog features over the first `k` monitored days, identified by patient id.
pub fn assemble_patient_features(record: &PatientRecord, k: u32, config: &FeatureConfig) -> Result<FeatureVector> {
    if k == 0 || k > record.monitored_days() {
        return Err(Error::domain(format!(
            "{}: {k} days requested but {} monitored",
            record.patient_id,
            record.monitored_days()
        )));
    }
    let mut fv = assemble_daily_features(record, record.monitoring_start, record.day(k - 1), config)?;
    fv.example_id = record.patient_id.clone();
    Ok(fv)
}

/// Examples in rows, catalog features in columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub modalities: Vec<ModalityTag>,
    pub ids: Vec<String>,
    pub values: Array2<f64>,
    pub missing: Array2<bool>,
}

impl FeatureMatrix {
    pub fn from_vectors(catalog: &FeatureCatalog, vectors: &[FeatureVector]) -> Result<Self> {
        let p = catalog.len();
        let mut values = Array2::from_elem((vectors.len(), p), f64::NAN);
        let mut missing = Array2::from_elem((vectors.len(), p), true);
        for (i, v) in vectors.iter().enumerate() {
            if v.values.len() != p || v.missing.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: v.values.len() });
            }
            for j in 0..p {
                values[[i, j]] = v.values[j];
                missing[[i, j]] = v.missing[j];
            }
        }
        Ok(Self {
            names: catalog.names(),
            modalities: catalog.modalities(),
            ids: vectors.iter().map(|v| v.example_id.clone()).collect(),
            values,
            missing,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            modalities: cols.iter().map(|&c| self.modalities[c]).collect(),
            ids: self.ids.clone(),
            values: self.values.select(Axis(1), cols),
            missing: self.missing.select(Axis(1), cols),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            modalities: self.modalities.clone(),
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            values: self.values.select(Axis(0), rows),
            missing: self.missing.select(Axis(0), rows),
        }
    }

    pub fn restrict_modalities(&self, keep: &[ModalityTag]) -> Self {
        let cols: Vec<usize> = (0..self.n_cols()).filter(|&j| keep.contains(&self.modalities[j])).collect();
        self.select_columns(&cols)
    }

    /// Drops columns missing in every row of `rows`; returns the dropped names.
    pub fn drop_unobserved_columns(&self, rows: &[usize]) -> (Self, Vec<String>) {
        let (keep, drop): (Vec<usize>, Vec<usize>) =
            (0..self.n_cols()).partition(|&j| rows.iter().any(|&i| !self.missing[[i, j]]));
        (self.select_columns(&keep), drop.into_iter().map(|j| self.names[j].clone()).collect())
    }

    /// CSV with an `example_id` column followed by feature columns; missing cells are empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["example_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend((0..self.n_cols()).map(|j| {
                let v = self.values[[i, j]];
                if v.is_nan() { String::new() } else { format!("{v}") }
            }));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar missing-mask: `{"example_id": ["feature", ...]}` listing originally-missing cells.
    pub fn write_mask_json(&self, path: &Path) -> Result<()> {
        let mask: std::collections::BTreeMap<&str, Vec<&str>> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let cols = (0..self.n_cols()).filter(|&j| self.missing[[i, j]]).map(|j| self.names[j].as_str()).collect();
                (id.as_str(), cols)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&mask)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Patient-level matrix over the first `k` days of every record, in record order.
pub fn extract_patient_matrix(records: &[PatientRecord], k: u32, config: &FeatureConfig) -> Result<FeatureMatrix> {
    let vectors: Vec<FeatureVector> = records
        .par_iter()
        .map(|r| assemble_patient_features(r, k, config))
        .collect::<Result<_>>()?;
    FeatureMatrix::from_vectors(&FeatureCatalog::standard(), &vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic_cohort, Missingness, SynthConfig};

    fn clean_record() -> PatientRecord {
        let cfg = SynthConfig { n_patients: 2, n_deteriorated: 0, days_per_patient: 10, missingness: Missingness::none(), ..SynthConfig::default() };
        generate_synthetic_cohort(&cfg).unwrap().remove(0)
    }

    #[test]
    fn fully_present_window_has_no_missing() {
        let r = clean_record();
        let fv = assemble_daily_features(&r, r.day(1), r.day(3), &FeatureConfig::default()).unwrap();
        let cat = FeatureCatalog::standard();
        let missing: Vec<&str> = (0..cat.len()).filter(|&j| fv.missing[j]).map(|j| cat.features[j].name.as_str()).collect();
        assert!(missing.is_empty(), "{missing:?}");
        assert!(fv.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn no_sleep_data_masks_every_sleep_feature() {
        let mut r = clean_record();
        r.sleep_status = crate::ingest::SampleSeries::empty(crate::ingest::Modality::SleepStatus);
        r.sleep_summaries.clear();
        let fv = assemble_daily_features(&r, r.day(0), r.day(9), &FeatureConfig::default()).unwrap();
        let cat = FeatureCatalog::standard();
        for j in 0..cat.len() {
            assert_eq!(fv.missing[j], cat.features[j].modality == ModalityTag::Sleep, "{}", cat.features[j].name);
        }
    }

    #[test]
    fn full_span_patient_equals_daily() {
        let r = clean_record();
        let cfg = FeatureConfig::default();
        let a = assemble_patient_features(&r, r.monitored_days(), &cfg).unwrap();
        let b = assemble_daily_features(&r, r.monitoring_start, r.monitoring_end, &cfg).unwrap();
        assert_eq!(a.missing, b.missing);
        assert_eq!(a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert!(assemble_patient_features(&r, r.monitored_days() + 1, &cfg).is_err());
        assert!(assemble_patient_features(&r, 0, &cfg).is_err());
        let k5 = assemble_patient_features(&r, 5, &cfg).unwrap();
        assert_ne!(k5.values, a.values);
        assert_eq!(assemble_patient_features(&r, 5, &cfg).unwrap(), k5);
    }

    #[test]
    fn shifted_identical_data_gives_identical_values() {
        use crate::ingest::{SampleSeries, TimedSample};
        let r = clean_record();
        // Copy days 0..=1 onto days 5..=6 for every stream, then compare windows.
        let mut copy = r.clone();
        let shift = 5 * 1440;
        let src = MinuteSpan::days(r.day(0), r.day(1));
        let dst = MinuteSpan::days(r.day(5), r.day(6));
        let remap = |s: &SampleSeries| {
            let mut v: Vec<TimedSample> = s.samples().iter().filter(|x| !dst.contains(x.timestamp)).copied().collect();
            v.extend(s.window(src).iter().map(|x| TimedSample::new(x.timestamp.offset(shift), x.value)));
            SampleSeries::from_unordered(s.modality(), v).unwrap()
        };
        copy.heart_rate = remap(&r.heart_rate);
        copy.steps = remap(&r.steps);
        copy.sleep_status = remap(&r.sleep_status);
        copy.sleep_summaries.retain(|s| s.date < r.day(5) || s.date > r.day(6));
        let moved: Vec<SleepEpisodeSummary> = r.sleep_summaries.iter().filter(|s| s.date <= r.day(1))
            .map(|s| SleepEpisodeSummary { date: s.date + Duration::days(5), ..*s }).collect();
        copy.sleep_summaries.extend(moved);
        copy.sleep_summaries.sort_by_key(|s| s.date);
        let cfg = FeatureConfig { hr_bounds: Some((30.0, 200.0)), ..FeatureConfig::default() };
        let a = assemble_daily_features(&copy, r.day(0), r.day(1), &cfg).unwrap();
        let b = assemble_daily_features(&copy, r.day(5), r.day(6), &cfg).unwrap();
        assert_eq!(a.missing, b.missing);
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn mask_and_csv_export() {
        let r = clean_record();
        let m = extract_patient_matrix(std::slice::from_ref(&r), 3, &FeatureConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.write_csv(&dir.path().join("f.csv")).unwrap();
        m.write_mask_json(&dir.path().join("mask.json")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
        assert!(text.starts_with("example_id,daily_step_min,"));
        assert_eq!(text.lines().count(), 2);
    }
}
