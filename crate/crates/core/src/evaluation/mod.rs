//! Experimental protocols and metrics.

pub mod ablation;
pub mod aggregate;
pub mod benchmark;
pub mod config;
pub mod cv;
pub mod early_warning;
pub mod metrics;
pub mod prep;
pub mod risk;
pub mod sfs;

pub use ablation::{all_modality_subsets, modality_ablation, monitoring_length_ablation, subset_label, AblationRow};
pub use aggregate::{write_results_csv, AveragedMetrics, MeanStd, ResultRow};
pub use benchmark::{contaminated_benchmark, Benchmark, BenchmarkConfig};
pub use config::{EarlyWarningConfig, ExperimentConfig, RiskConfig};
pub use cv::{repeated_kfold, stratified_folds, ClassifierSpec, CvConfig, CvResult, FoldRecord};
pub use early_warning::{
    anomaly_split, build_early_warning_dataset, repeat_anomaly_eval, window_label, AnomalyEvalResult, AnomalyModelSpec,
    EarlyWarningDataset, LabelMode, SplitPlan, WindowExample,
};
pub use metrics::{
    best_accuracy_operating_point, confusion_metrics, consistent_counts, fixed_sensitivity_operating_point, pr_auc, roc_auc,
    threshold_sweep, ConfusionCounts, CurvePoint, MetricsReport, OperatingPoint, PublishedRatios,
};
pub use prep::{prepare_split, repeat_rng, FoldPrep};
pub use risk::{lace_baseline, risk_labels, LaceBaseline};
pub use sfs::{sequential_forward_selection, sfs_knn, sfs_logistic, SfsResult};
