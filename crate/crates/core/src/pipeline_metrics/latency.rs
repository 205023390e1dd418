//! End-to-end latency from device capture to cloud arrival.

use crate::error::{Error, Result};
use crate::ingest::SyncEvent;

use super::cdf::EmpiricalCdf;

/// Step CDF of per-event latency in minutes.
pub fn latency_cdf(events: &[SyncEvent]) -> Result<EmpiricalCdf> {
    if events.is_empty() {
        return Err(Error::domain("latency CDF needs at least one sync event"));
    }
    EmpiricalCdf::from_values(events.iter().map(SyncEvent::latency_minutes).collect())
}
