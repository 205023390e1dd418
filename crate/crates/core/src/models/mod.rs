//! Anomaly detectors, classifiers and the LACE index.

pub mod kernel;
pub mod kmeans;
pub mod knn;
pub mod lace;
pub mod lof;
pub mod logistic;
pub mod ocsvm;
pub mod persist;
pub mod scoring;
pub mod standardize;
pub mod weighted;

pub use kernel::{KernelChoice, KernelSpec};
pub use kmeans::KMeansModel;
pub use knn::{knn_vote, KnnModel, KnnPrediction, DEFAULT_K};
pub use lace::{lace_classify, lace_score, LaceInputs, LACE_THRESHOLD};
pub use lof::LofModel;
pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use ocsvm::{train_ocsvm, OcSvmConfig, OcSvmModel};
pub use persist::{load_model, save_model, ModelFile};
pub use scoring::calibrate_threshold;
pub use standardize::Standardizer;
pub use weighted::{train_weighted_ocsvm, WeightedOcSvmConfig, WeightedOcSvmModel};
