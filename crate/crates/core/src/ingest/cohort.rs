//! Cohort directories: one JSON manifest plus per-patient, per-stream CSV files.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::csv_io::{self, RejectedRow};
use super::types::{Modality, OutcomeLabel, PatientRecord, SampleSeries};
use crate::error::{Error, Result};
use crate::models::lace::LaceInputs;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SLEEP_SUMMARY_STEM: &str = "sleep";
pub const SYNC_STEM: &str = "sync";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub patient_id: String,
    pub monitoring_start: NaiveDate,
    pub monitoring_end: NaiveDate,
    #[serde(default)]
    pub deterioration_dates: Vec<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lace: Option<LaceInputs>,
}

impl ManifestEntry {
    pub fn of(record: &PatientRecord) -> Self {
        Self {
            patient_id: record.patient_id.clone(),
            monitoring_start: record.monitoring_start,
            monitoring_end: record.monitoring_end,
            deterioration_dates: record.outcome.deterioration_dates.clone(),
            lace: record.lace,
        }
    }
}

/// Row-level rejection attributed to a patient file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRejection {
    pub patient_id: String,
    pub file: String,
    #[serde(flatten)]
    pub row: RejectedRow,
}

#[derive(Debug, Clone)]
pub struct LoadedCohort {
    pub records: Vec<PatientRecord>,
    pub rejected: Vec<FileRejection>,
}

fn data_file(dir: &Path, patient_id: &str, stem: &str) -> PathBuf {
    dir.join(format!("{patient_id}.{stem}.csv"))
}

fn known_stems() -> Vec<&'static str> {
    let mut stems: Vec<&'static str> = Modality::ALL.iter().map(|m| m.file_stem()).collect();
    stems.push(SLEEP_SUMMARY_STEM);
    stems.push(SYNC_STEM);
    stems
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_FILE);
    let file = File::open(&path).map_err(|e| Error::Cohort(format!("{}: {e}", path.display())))?;
    let entries: Vec<ManifestEntry> = serde_json::from_reader(BufReader::new(file))?;
    let mut seen = BTreeSet::new();
    for e in &entries {
        if !seen.insert(e.patient_id.as_str()) {
            return Err(Error::Cohort(format!("duplicate patient_id `{}` in manifest", e.patient_id)));
        }
    }
    Ok(entries)
}

/// Loads every manifest entry with its stream files.
///
/// An absent modality file yields an empty series; an entry with no files at
/// all, or a data file whose patient is not in the manifest, is an error.
pub fn load_cohort(dir: &Path) -> Result<LoadedCohort> {
    let entries = read_manifest(dir)?;
    let ids: BTreeSet<&str> = entries.iter().map(|e| e.patient_id.as_str()).collect();
    let stems = known_stems();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        let Some(base) = name.strip_suffix(".csv") else { continue };
        if let Some((pid, stem)) = base.rsplit_once('.') {
            if stems.contains(&stem) && !ids.contains(pid) {
                return Err(Error::Cohort(format!("file `{name}` belongs to `{pid}`, which is not in the manifest")));
            }
        }
    }

    let mut records = Vec::with_capacity(entries.len());
    let mut rejected = Vec::new();
    for entry in entries {
        let pid = entry.patient_id.as_str();
        if !stems.iter().any(|s| data_file(dir, pid, s).exists()) {
            return Err(Error::Cohort(format!("manifest entry `{pid}` has no data files")));
        }
        let mut series = Vec::with_capacity(3);
        for modality in Modality::ALL {
            let path = data_file(dir, pid, modality.file_stem());
            if !path.exists() {
                series.push(SampleSeries::empty(modality));
                continue;
            }
            let parsed = csv_io::parse_intraday(BufReader::new(File::open(&path)?), modality)
                .map_err(|e| Error::Cohort(format!("{}: {e}", path.display())))?;
            let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            rejected.extend(parsed.rejected.into_iter().map(|row| FileRejection {
                patient_id: pid.to_string(),
                file: file.clone(),
                row,
            }));
            series.push(parsed.series);
        }
        let sleep_path = data_file(dir, pid, SLEEP_SUMMARY_STEM);
        let sleep_summaries = if sleep_path.exists() {
            csv_io::parse_sleep_summaries(BufReader::new(File::open(&sleep_path)?))
                .map_err(|e| Error::Cohort(format!("{}: {e}", sleep_path.display())))?
        } else {
            Vec::new()
        };
        let sync_path = data_file(dir, pid, SYNC_STEM);
        let sync_events = if sync_path.exists() {
            csv_io::parse_sync_log(BufReader::new(File::open(&sync_path)?))
                .map_err(|e| Error::Cohort(format!("{}: {e}", sync_path.display())))?
        } else {
            Vec::new()
        };
        let sleep_status = series.pop().expect("three series");
        let steps = series.pop().expect("three series");
        let heart_rate = series.pop().expect("three series");
        let record = PatientRecord {
            patient_id: entry.patient_id,
            heart_rate,
            steps,
            sleep_status,
            sleep_summaries,
            sync_events,
            monitoring_start: entry.monitoring_start,
            monitoring_end: entry.monitoring_end,
            outcome: OutcomeLabel::new(entry.deterioration_dates),
            lace: entry.lace,
        };
        record.validate()?;
        records.push(record);
    }
    Ok(LoadedCohort { records, rejected })
}

/// Writes `records` in the layout read by [`load_cohort`]. Empty streams produce no file.
pub fn write_cohort(dir: &Path, records: &[PatientRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest: Vec<ManifestEntry> = records.iter().map(ManifestEntry::of).collect();
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    for r in records {
        let pid = r.patient_id.as_str();
        for modality in Modality::ALL {
            let series = r.series(modality);
            if !series.is_empty() {
                let out = BufWriter::new(File::create(data_file(dir, pid, modality.file_stem()))?);
                csv_io::write_intraday(series, out)?;
            }
        }
        if !r.sleep_summaries.is_empty() {
            let out = BufWriter::new(File::create(data_file(dir, pid, SLEEP_SUMMARY_STEM))?);
            csv_io::write_sleep_summaries(&r.sleep_summaries, out)?;
        }
        if !r.sync_events.is_empty() {
            let out = BufWriter::new(File::create(data_file(dir, pid, SYNC_STEM))?);
            csv_io::write_sync_log(&r.sync_events, out)?;
        }
    }
    Ok(())
}
