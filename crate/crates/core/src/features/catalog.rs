//! The ordered feature catalog.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModalityTag {
    Step,
    #[serde(rename = "HR")]
    Hr,
    Sleep,
}

impl ModalityTag {
    pub const ALL: [ModalityTag; 3] = [ModalityTag::Step, ModalityTag::Hr, ModalityTag::Sleep];

    pub fn as_str(self) -> &'static str {
        match self {
            ModalityTag::Step => "Step",
            ModalityTag::Hr => "HR",
            ModalityTag::Sleep => "Sleep",
        }
    }
}

impl fmt::Display for ModalityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModalityTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "step" | "steps" => Ok(ModalityTag::Step),
            "hr" | "heart_rate" => Ok(ModalityTag::Hr),
            "sleep" => Ok(ModalityTag::Sleep),
            other => Err(Error::config(format!("unknown modality `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub modality: ModalityTag,
    pub definition: String,
}

/// Sleep-summary fields aggregated with min, max and mean.
pub const SLEEP_SUMMARY_FIELDS: [&str; 8] = [
    "time_in_bed",
    "min_to_fall_asleep",
    "min_asleep",
    "min_awake",
    "min_after_wakeup",
    "awake_count",
    "restless_count",
    "restless_duration",
];

const STEP: [(&str, &str); 8] = [
    ("daily_step_min", "minimum over days of total steps in the awake window"),
    ("daily_step_max", "maximum over days of total steps in the awake window"),
    ("daily_step_mean", "mean over days of total steps in the awake window"),
    ("activity_quality", "fraction of observed awake minutes with a positive step count"),
    ("daily_sedentary_bout_count", "mean number of sedentary bouts per day"),
    ("sedentary_per_bout", "mean sedentary bout duration in minutes"),
    ("sedentary_bout_min", "shortest sedentary bout in minutes"),
    ("sedentary_bout_max", "longest sedentary bout in minutes"),
];

const HR: [(&str, &str); 12] = [
    ("hr_mean", "mean heart rate"),
    ("hr_std", "population standard deviation of heart rate"),
    ("hr_min", "minimum heart rate"),
    ("hr_max", "maximum heart rate"),
    ("hr_skewness", "heart-rate skewness, (N-1)-normalised"),
    ("hr_kurtosis", "heart-rate excess kurtosis, (N-1)-normalised"),
    ("hr_energy", "co-occurrence energy of quantised heart rate"),
    ("hr_entropy", "co-occurrence entropy, sum p ln p"),
    ("hr_correlation", "co-occurrence correlation"),
    ("hr_inertia", "co-occurrence inertia"),
    ("hr_local_homogeneity", "co-occurrence local homogeneity"),
    ("dfa_hr_10", "DFA-1 fluctuation of heart rate at a 10-minute window"),
];

const SLEEP: [(&str, &str); 6] = [
    ("sleep_status_skewness", "skewness of per-minute sleep status"),
    ("sleep_status_kurtosis", "excess kurtosis of per-minute sleep status"),
    ("dfa_sleep_60", "DFA-1 fluctuation of sleep status at a 60-minute window"),
    ("dfa_sleep_120", "DFA-1 fluctuation of sleep status at a 120-minute window"),
    ("dfa_sleep_360", "DFA-1 fluctuation of sleep status at a 360-minute window"),
    ("sleep_efficiency", "mean over episodes of minutes asleep / time in bed"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub features: Vec<FeatureDef>,
}

impl FeatureCatalog {
    /// 8 step, 12 heart-rate and 30 sleep features (50 in total).
    pub fn standard() -> Self {
        let mut features = Vec::new();
        let mut push = |name: String, modality, definition: String| features.push(FeatureDef { name, modality, definition });
        for (n, d) in STEP {
            push(n.into(), ModalityTag::Step, d.into());
        }
        for (n, d) in HR {
            push(n.into(), ModalityTag::Hr, d.into());
        }
        for (n, d) in SLEEP {
            push(n.into(), ModalityTag::Sleep, d.into());
        }
        for field in SLEEP_SUMMARY_FIELDS {
            for stat in ["min", "max", "mean"] {
                push(
                    format!("{field}_{stat}"),
                    ModalityTag::Sleep,
                    format!("{stat} of sleep-episode {} over the window", field.replace('_', " ")),
                );
            }
        }
        Self { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn modalities(&self) -> Vec<ModalityTag> {
        self.features.iter().map(|f| f.modality).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Column indices whose modality is in `keep`.
    pub fn indices_for(&self, keep: &[ModalityTag]) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| keep.contains(&f.modality))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.features)?;
        s.push('\n');
        Ok(s)
    }
}
