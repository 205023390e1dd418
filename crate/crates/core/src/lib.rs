//! Wearable-sensor pipeline for clinical deterioration early warning and
//! risk prediction: ingestion, data-quality metrics, feature extraction,
//! one-class and supervised models, and the evaluation protocols.

pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod models;
pub mod pipeline_metrics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FirstOrderStats = features::FirstOrderStats<f64>;
pub type CooccurrenceFeatures = features::CooccurrenceFeatures<f64>;
pub type OcSvmModel = models::OcSvmModel<f64>;
pub type OcSvmConfig = models::OcSvmConfig<f64>;
pub type WeightedOcSvmModel = models::WeightedOcSvmModel<f64>;
pub type WeightedOcSvmConfig = models::WeightedOcSvmConfig<f64>;
pub type KnnModel = models::KnnModel<f64>;
pub type LofModel = models::LofModel<f64>;
pub type KMeansModel = models::KMeansModel<f64>;
pub type LogisticModel = models::LogisticModel<f64>;
pub type Standardizer = models::Standardizer<f64>;
