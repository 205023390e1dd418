//! Data-collection quality: yield, reliability, latency and compliance alerts.

pub mod alerts;
pub mod cdf;
pub mod coverage;
pub mod latency;
pub mod reliability;

pub use alerts::{compliance_check, evaluate_alert_rules, AlertConfig, AlertLog, AlertReason, ComplianceAlert};
pub use cdf::{CdfPoint, EmpiricalCdf};
pub use coverage::{compute_sleep_yield, compute_yield, yield_report, PatientYield, YieldReport, YieldSummary};
pub use latency::latency_cdf;
pub use reliability::{gap_analysis, reliability_report, GapAnalysis, GapEvent, ReliabilityReport};
