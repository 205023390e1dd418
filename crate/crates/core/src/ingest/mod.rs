//! Cohort data model, file formats and the synthetic cohort generator.

pub mod cohort;
pub mod csv_io;
pub mod synth;
pub mod time;
pub mod types;

pub use cohort::{load_cohort, read_manifest, write_cohort, LoadedCohort, ManifestEntry};
pub use csv_io::{parse_intraday, write_intraday, ParsedSeries, RejectedRow};
pub use synth::{generate_synthetic_cohort, Dropout, Missingness, SynthConfig};
pub use time::{Minute, MinuteSpan, MINUTES_PER_DAY};
pub use types::{
    BatteryLevel, Modality, OutcomeLabel, PatientRecord, SampleSeries, SleepEpisodeSummary, SyncEvent, TimedSample,
};
