//! One function per subcommand. Each writes its tables, then the run manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use deteriorate_core::evaluation::{
    build_early_warning_dataset, contaminated_benchmark, fixed_sensitivity_operating_point, lace_baseline, modality_ablation,
    monitoring_length_ablation, prepare_split, repeat_anomaly_eval, repeated_kfold, risk_labels, write_results_csv,
    all_modality_subsets, AnomalyEvalResult, AnomalyModelSpec, AveragedMetrics, ClassifierSpec, ExperimentConfig, MeanStd,
    MetricsReport, ResultRow,
};
use deteriorate_core::features::{extract_patient_matrix, FeatureCatalog, FeatureConfig, FeatureMatrix};
use deteriorate_core::ingest::{
    generate_synthetic_cohort, load_cohort, write_cohort, LoadedCohort, Modality, PatientRecord, SynthConfig,
};
use deteriorate_core::models::{save_model, train_weighted_ocsvm, KernelChoice, OcSvmConfig, WeightedOcSvmConfig};
use deteriorate_core::pipeline_metrics::{
    compliance_check, latency_cdf, reliability_report, yield_report, AlertConfig, AlertLog, ComplianceAlert,
};
use deteriorate_core::Error as CoreError;

use crate::manifest::RunManifest;
use crate::output::{out_dir, read_config, require_dir, write_json};
use crate::{Common, UsageError};

fn load(cohort: &Path) -> Result<LoadedCohort> {
    require_dir(cohort, "cohort")?;
    if !cohort.join(deteriorate_core::ingest::cohort::MANIFEST_FILE).is_file() {
        return Err(UsageError(format!("`{}` has no cohort manifest", cohort.display())).into());
    }
    let loaded = load_cohort(cohort).with_context(|| format!("loading cohort {}", cohort.display()))?;
    if loaded.records.is_empty() {
        return Err(CoreError::Cohort("cohort has no patients".into()).into());
    }
    if !loaded.rejected.is_empty() {
        log::warn!("{} rows rejected while loading {}", loaded.rejected.len(), cohort.display());
    }
    Ok(loaded)
}

fn experiment_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = read_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn feature_config(cfg: &ExperimentConfig, records: &[PatientRecord]) -> FeatureConfig {
    cfg.features.clone().fit_hr_bounds(records)
}

fn check_reports<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> Result<()> {
    for r in reports {
        if !r.recomputes_exactly() {
            return Err(CoreError::Invariant(format!("metrics do not recompute from their counts: {:?}", r.counts)).into());
        }
    }
    Ok(())
}

fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_results_csv(rows, BufWriter::new(File::create(path)?))?;
    Ok(())
}

fn keys(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn manifest_with_cohort(command: &str, config: &impl Serialize, seed: Option<u64>, workers: usize, out: &Path, cohort: &Path, common: &Common) -> Result<RunManifest> {
    let mut m = RunManifest::new(command, serde_json::to_value(config)?, seed, workers, out);
    m.add_input_tree(cohort)?;
    if let Some(c) = &common.config {
        m.add_input_file(c)?;
    }
    Ok(m)
}

pub fn synth(common: &Common, workers: usize) -> Result<()> {
    let mut cfg: SynthConfig = read_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    let out = out_dir(common, "synth")?;
    let records = generate_synthetic_cohort(&cfg)?;
    write_cohort(&out, &records)?;
    log::info!("wrote {} patients to {}", records.len(), out.display());
    let mut m = RunManifest::new("synth", serde_json::to_value(&cfg)?, Some(cfg.rng_seed), workers, &out);
    if let Some(c) = &common.config {
        m.add_input_file(c)?;
    }
    m.finish()
}

#[derive(Serialize)]
struct PatientSummary {
    patient_id: String,
    monitored_days: u32,
    heart_rate_samples: usize,
    step_samples: usize,
    sleep_status_samples: usize,
    sleep_episodes: usize,
    sync_events: usize,
    deterioration_dates: Vec<NaiveDate>,
    has_lace: bool,
}

pub fn ingest(cohort: &Path, common: &Common, workers: usize) -> Result<()> {
    let loaded = load(cohort)?;
    let out = out_dir(common, "ingest")?;
    let summary: Vec<PatientSummary> = loaded
        .records
        .iter()
        .map(|r| PatientSummary {
            patient_id: r.patient_id.clone(),
            monitored_days: r.monitored_days(),
            heart_rate_samples: r.series(Modality::HeartRate).len(),
            step_samples: r.series(Modality::Step).len(),
            sleep_status_samples: r.series(Modality::SleepStatus).len(),
            sleep_episodes: r.sleep_summaries.len(),
            sync_events: r.sync_events.len(),
            deterioration_dates: r.outcome.deterioration_dates.clone(),
            has_lace: r.lace.is_some(),
        })
        .collect();
    write_json(&out.join("ingest_summary.json"), &summary)?;
    let mut w = csv::Writer::from_path(out.join("rejected_rows.csv"))?;
    w.write_record(["patient_id", "file", "line", "reason"])?;
    for r in &loaded.rejected {
        w.write_record([r.patient_id.as_str(), r.file.as_str(), &r.row.line.to_string(), r.row.reason.as_str()])?;
    }
    w.flush()?;
    manifest_with_cohort("ingest", &serde_json::Value::Null, None, workers, &out, cohort, common)?.finish()
}

#[derive(Serialize)]
struct QualitySummary {
    patients: usize,
    mean_yield_heart_rate: f64,
    mean_yield_steps: f64,
    mean_yield_sleep: f64,
    median_ttr_heart_rate: f64,
    median_ttr_steps: f64,
    median_latency_minutes: Option<f64>,
    p95_latency_minutes: Option<f64>,
    alerts: usize,
}

pub fn pipeline_report(cohort: &Path, common: &Common, workers: usize) -> Result<()> {
    let alert_cfg: AlertConfig = read_config(common.config.as_deref())?;
    let loaded = load(cohort)?;
    let records = &loaded.records;
    let out = out_dir(common, "pipeline-report")?;

    let yields = yield_report(records)?;
    write_json(&out.join("yield.json"), &yields)?;
    let hr = reliability_report(records, Modality::HeartRate)?;
    let steps = reliability_report(records, Modality::Step)?;
    write_json(&out.join("reliability.json"), &[&hr, &steps])?;

    let events: Vec<_> = records.iter().flat_map(|r| r.sync_events.iter().copied()).collect();
    let latency = if events.is_empty() {
        log::warn!("no sync events; latency CDF skipped");
        None
    } else {
        let cdf = latency_cdf(&events)?;
        cdf.write_csv(BufWriter::new(File::create(out.join("latency_cdf.csv"))?))?;
        Some(cdf)
    };

    let alerts: Vec<Vec<ComplianceAlert>> = records
        .par_iter()
        .map(|r| (0..r.monitored_days()).flat_map(|d| compliance_check(r, r.day(d), &alert_cfg)).collect())
        .collect();
    let alert_path = out.join("alerts.jsonl");
    if alert_path.exists() {
        fs::remove_file(&alert_path)?;
    }
    let log = AlertLog::open(&alert_path)?;
    for a in &alerts {
        log.append(a)?;
    }

    let summary = QualitySummary {
        patients: records.len(),
        mean_yield_heart_rate: yields.heart_rate.mean,
        mean_yield_steps: yields.steps.mean,
        mean_yield_sleep: yields.sleep.mean,
        median_ttr_heart_rate: hr.median_ttr,
        median_ttr_steps: steps.median_ttr,
        median_latency_minutes: latency.as_ref().map(|c| c.median()),
        p95_latency_minutes: latency.as_ref().map(|c| c.percentile(95.0)),
        alerts: alerts.iter().map(Vec::len).sum(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    manifest_with_cohort("pipeline-report", &alert_cfg, None, workers, &out, cohort, common)?.finish()
}

pub fn features(cohort: &Path, days: Option<u32>, common: &Common, workers: usize) -> Result<()> {
    let cfg = experiment_config(common)?;
    let loaded = load(cohort)?;
    let k = days.unwrap_or(cfg.risk.k_days);
    if k == 0 {
        return Err(UsageError("--days must be at least 1".into()).into());
    }
    let fc = feature_config(&cfg, &loaded.records);
    let out = out_dir(common, "features")?;
    let matrix = extract_patient_matrix(&loaded.records, k, &fc)?;
    matrix.write_csv(&out.join("features.csv"))?;
    matrix.write_mask_json(&out.join("missing_mask.json"))?;
    fs::write(out.join("catalog.json"), FeatureCatalog::standard().to_json()?)?;
    #[derive(Serialize)]
    struct Snapshot<'a> {
        days: u32,
        features: &'a FeatureConfig,
    }
    let snap = Snapshot { days: k, features: &fc };
    manifest_with_cohort("features", &snap, None, workers, &out, cohort, common)?.finish()
}

pub fn train(cohort: &Path, window: u32, horizon: u32, common: &Common, workers: usize) -> Result<()> {
    let cfg = experiment_config(common)?;
    if !(1..=7).contains(&window) || !(1..=7).contains(&horizon) {
        return Err(UsageError("window and horizon must lie in 1..=7".into()).into());
    }
    let loaded = load(cohort)?;
    let fc = feature_config(&cfg, &loaded.records);
    let ds = build_early_warning_dataset(&loaded.records, window, horizon, cfg.early_warning.label_mode, &fc)?;
    let matrix = ds.features.restrict_modalities(&cfg.early_warning.modalities);
    let normals: Vec<usize> = (0..ds.examples.len()).filter(|&i| !ds.examples[i].label).collect();
    if normals.is_empty() {
        return Err(CoreError::Domain("no normal windows to train on".into()).into());
    }
    let (x, _, prep) = prepare_split(&matrix, &normals, &[])?;
    let (nu, beta) = cfg
        .early_warning
        .models
        .iter()
        .find_map(|m| match *m {
            AnomalyModelSpec::WeightedOcSvm { nu, beta } => Some((nu, beta)),
            _ => None,
        })
        .unwrap_or((0.09, 0.95));
    let wcfg = WeightedOcSvmConfig {
        base: OcSvmConfig { nu, kernel: KernelChoice::default(), standardize: true },
        beta,
        ..Default::default()
    };
    let model = train_weighted_ocsvm(x.view(), &wcfg)?;
    let out = out_dir(common, "train")?;
    save_model(&out.join("model.json"), "weighted_ocsvm", Some(cfg.seed), &model)?;
    write_json(&out.join("preprocessing.json"), &prep)?;
    manifest_with_cohort("train", &cfg, Some(cfg.seed), workers, &out, cohort, common)?.finish()
}

#[derive(Serialize)]
struct EarlyWarningRow<'a> {
    window: Option<u32>,
    horizon: Option<u32>,
    examples: usize,
    positives: usize,
    result: &'a AnomalyEvalResult,
}

#[derive(Serialize)]
struct Skipped {
    window: u32,
    horizon: u32,
    reason: String,
}

fn anomaly_rows(
    matrix: &FeatureMatrix,
    labels: &[bool],
    models: &[AnomalyModelSpec],
    repeats: usize,
    seed: u64,
) -> Result<Vec<AnomalyEvalResult>> {
    let results: Vec<AnomalyEvalResult> =
        models.iter().map(|m| repeat_anomaly_eval(matrix, labels, m, repeats, seed)).collect::<deteriorate_core::Result<_>>()?;
    check_reports(results.iter().flat_map(|r| r.per_repeat.iter()))?;
    Ok(results)
}

pub fn early_warn(cohort: Option<&Path>, benchmark: bool, common: &Common, workers: usize) -> Result<()> {
    let cfg = experiment_config(common)?;
    let ew = &cfg.early_warning;
    let mut rows: Vec<ResultRow> = Vec::new();
    let mut detail = Vec::new();
    let mut skipped = Vec::new();

    let manifest = if benchmark {
        let bcfg = deteriorate_core::evaluation::BenchmarkConfig { seed: cfg.seed, ..cfg.benchmark.clone() };
        let b = contaminated_benchmark(&bcfg)?;
        let results = anomaly_rows(&b.matrix, &b.labels, &ew.models, ew.repeats, cfg.seed)?;
        let positives = b.labels.iter().filter(|&&y| y).count();
        for r in &results {
            rows.push(ResultRow {
                keys: keys(&[
                    ("dataset", "benchmark".into()),
                    ("model", r.model.name().into()),
                    ("examples", b.labels.len().to_string()),
                    ("positives", positives.to_string()),
                ]),
                metrics: r.averaged.clone(),
            });
        }
        let out = out_dir(common, "early-warn")?;
        write_detail(&out, &results.iter().map(|r| EarlyWarningRow { window: None, horizon: None, examples: b.labels.len(), positives, result: r }).collect::<Vec<_>>(), &skipped)?;
        write_rows(&out.join("results.csv"), &rows)?;
        let mut m = RunManifest::new("early-warn", serde_json::to_value(&cfg)?, Some(cfg.seed), workers, &out);
        if let Some(c) = &common.config {
            m.add_input_file(c)?;
        }
        m
    } else {
        let cohort = cohort.ok_or_else(|| UsageError("--cohort or --benchmark is required".into()))?;
        let loaded = load(cohort)?;
        let fc = feature_config(&cfg, &loaded.records);
        let first_h = *ew.horizons.first().ok_or_else(|| UsageError("no horizons configured".into()))?;
        for &w in &ew.windows {
            let base = build_early_warning_dataset(&loaded.records, w, first_h, ew.label_mode, &fc)?;
            for &h in &ew.horizons {
                let ds = base.relabel(h, &loaded.records)?;
                let labels = ds.labels();
                let positives = ds.positives();
                let normals = labels.len() - positives;
                if positives == 0 || normals < deteriorate_core::evaluation::early_warning::MIN_NORMALS {
                    let reason = format!("{positives} positive and {normals} normal windows");
                    log::warn!("skipping w={w} h={h}: {reason}");
                    skipped.push(Skipped { window: w, horizon: h, reason });
                    continue;
                }
                let matrix = ds.features.restrict_modalities(&ew.modalities);
                let results = anomaly_rows(&matrix, &labels, &ew.models, ew.repeats, cfg.seed)?;
                for r in results {
                    rows.push(ResultRow {
                        keys: keys(&[
                            ("window", w.to_string()),
                            ("horizon", h.to_string()),
                            ("model", r.model.name().into()),
                            ("examples", labels.len().to_string()),
                            ("positives", positives.to_string()),
                        ]),
                        metrics: r.averaged.clone(),
                    });
                    detail.push((w, h, labels.len(), positives, r));
                }
            }
        }
        let out = out_dir(common, "early-warn")?;
        let view: Vec<EarlyWarningRow> = detail
            .iter()
            .map(|(w, h, n, p, r)| EarlyWarningRow { window: Some(*w), horizon: Some(*h), examples: *n, positives: *p, result: r })
            .collect();
        write_detail(&out, &view, &skipped)?;
        write_rows(&out.join("results.csv"), &rows)?;
        manifest_with_cohort("early-warn", &cfg, Some(cfg.seed), workers, &out, cohort, common)?
    };
    manifest.finish()
}

fn write_detail(out: &Path, rows: &[EarlyWarningRow], skipped: &[Skipped]) -> Result<()> {
    #[derive(Serialize)]
    struct Detail<'a> {
        rows: &'a [EarlyWarningRow<'a>],
        skipped: &'a [Skipped],
    }
    write_json(&out.join("results.json"), &Detail { rows, skipped })
}

#[derive(Serialize)]
struct RiskModelSummary {
    model: String,
    averaged: AveragedMetrics,
    fixed_sensitivity: AveragedMetrics,
    best_threshold_accuracy: MeanStd,
}

pub fn risk(cohort: &Path, common: &Common, workers: usize) -> Result<()> {
    let cfg = experiment_config(common)?;
    let rc = &cfg.risk;
    let loaded = load(cohort)?;
    let records = &loaded.records;
    let min_days = records.iter().map(|r| r.monitored_days()).min().unwrap_or(0);
    if rc.k_days > min_days {
        return Err(UsageError(format!("k_days = {} exceeds the shortest monitoring period ({min_days} days)", rc.k_days)).into());
    }
    let fc = feature_config(&cfg, records);
    let labels = risk_labels(records);
    let full = extract_patient_matrix(records, rc.k_days, &fc)?;
    let matrix = full.restrict_modalities(&rc.modalities);
    let cv = rc.cv(cfg.seed);

    let mut rows = Vec::new();
    let mut fixed_rows = Vec::new();
    let mut summary = Vec::new();
    for spec in &rc.models {
        let r = repeated_kfold(&matrix, &labels, spec, &cv, false)?;
        check_reports(r.per_repeat.iter())?;
        rows.push(ResultRow { keys: keys(&[("model", spec.name().into())]), metrics: r.averaged.clone() });
        fixed_rows.push(ResultRow { keys: keys(&[("model", spec.name().into())]), metrics: r.fixed_sensitivity.clone() });
        summary.push(RiskModelSummary {
            model: spec.name().into(),
            averaged: r.averaged,
            fixed_sensitivity: r.fixed_sensitivity,
            best_threshold_accuracy: r.best_threshold_accuracy,
        });
    }
    if let Some(lace) = lace_baseline(records, rc.lace_threshold)? {
        check_reports([&lace.report])?;
        let scores: Vec<f64> = lace.scores.iter().map(|&s| f64::from(s)).collect();
        let fixed = fixed_sensitivity_operating_point(&labels, &scores, rc.target_sensitivity)?;
        let fixed_avg = AveragedMetrics::from_reports(&vec![fixed.report; rc.repeats]);
        rows.push(ResultRow { keys: keys(&[("model", "lace".into())]), metrics: lace.averaged(rc.repeats) });
        fixed_rows.push(ResultRow { keys: keys(&[("model", "lace".into())]), metrics: fixed_avg.clone() });
        summary.push(RiskModelSummary {
            model: "lace".into(),
            averaged: lace.averaged(rc.repeats),
            fixed_sensitivity: fixed_avg,
            best_threshold_accuracy: MeanStd::of([lace.report.accuracy]),
        });
    }

    let ablation_spec = rc.models.iter().copied().find(|m| matches!(m, ClassifierSpec::Knn { .. })).unwrap_or_default();
    let mut modality_rows = Vec::new();
    if rc.modality_ablation {
        for row in modality_ablation(&full, &labels, &all_modality_subsets(), &ablation_spec, &cv)? {
            check_reports(row.result.per_repeat.iter())?;
            modality_rows.push(ResultRow { keys: keys(&[("modalities", row.label)]), metrics: row.result.averaged });
        }
    }
    let mut length_rows = Vec::new();
    let days: Vec<u32> = rc
        .monitoring_days
        .iter()
        .copied()
        .filter(|&d| {
            let ok = d <= min_days;
            if !ok {
                log::warn!("monitoring length {d} exceeds the shortest record; skipped");
            }
            ok
        })
        .collect();
    if !days.is_empty() {
        for row in monitoring_length_ablation(records, &labels, &days, &fc, &ablation_spec, &cv)? {
            check_reports(row.result.per_repeat.iter())?;
            length_rows.push(ResultRow { keys: keys(&[("days", row.label)]), metrics: row.result.averaged });
        }
    }

    let out = out_dir(common, "risk")?;
    write_rows(&out.join("results.csv"), &rows)?;
    write_rows(&out.join("fixed_sensitivity.csv"), &fixed_rows)?;
    let mut w = csv::Writer::from_path(out.join("best_threshold_accuracy.csv"))?;
    w.write_record(["model", "accuracy", "accuracy_std"])?;
    for s in &summary {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        w.write_record([s.model.as_str(), &f(s.best_threshold_accuracy.mean), &f(s.best_threshold_accuracy.std)])?;
    }
    w.flush()?;
    if !modality_rows.is_empty() {
        write_rows(&out.join("modality_ablation.csv"), &modality_rows)?;
    }
    if !length_rows.is_empty() {
        write_rows(&out.join("monitoring_length.csv"), &length_rows)?;
    }
    write_json(&out.join("summary.json"), &summary)?;
    manifest_with_cohort("risk", &cfg, Some(cfg.seed), workers, &out, cohort, common)?.finish()
}
