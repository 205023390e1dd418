//! Feature extraction: segmentation, statistics, co-occurrence, DFA, assembly and imputation.

pub mod activity;
pub mod assemble;
pub mod catalog;
pub mod cooccurrence;
pub mod dfa;
pub mod impute;
pub mod stats;

pub use activity::{activity_day, extract_sedentary_bouts, segment_awake, ActivityDay, AwakeWindow, SedentaryBout};
pub use assemble::{
    assemble_daily_features, assemble_patient_features, extract_patient_matrix, FeatureConfig, FeatureMatrix,
    FeatureVector,
};
pub use catalog::{FeatureCatalog, FeatureDef, ModalityTag};
pub use cooccurrence::{cooccurrence_features, CooccurrenceFeatures, CooccurrenceMatrix, Quantizer};
pub use dfa::{dfa_exponent, dfa_fluctuation};
pub use impute::{impute_missing, ImputationMeans};
pub use stats::{first_order_stats, FirstOrderStats};
