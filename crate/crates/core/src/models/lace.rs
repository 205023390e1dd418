//! LACE readmission index (length of stay, acuity, comorbidity, ED visits).

use serde::{Deserialize, Serialize};

/// Default decision threshold; an index strictly above it is flagged.
pub const LACE_THRESHOLD: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LaceInputs {
    pub length_of_stay_days: u32,
    pub acute_admission: bool,
    pub charlson_index: u32,
    pub ed_visits_6mo: u32,
}

/// Points for length of stay: <1 day 0, 1-3 days 1-3, 4-6 days 4, 7-13 days 5, 14+ days 7.
pub fn length_of_stay_points(days: u32) -> u32 {
    match days {
        0 => 0,
        1..=3 => days,
        4..=6 => 4,
        7..=13 => 5,
        _ => 7,
    }
}

/// Comorbidity points: Charlson 0-3 map to themselves, 4 or more scores 5.
pub fn charlson_points(index: u32) -> u32 {
    if index >= 4 {
        5
    } else {
        index
    }
}

pub fn ed_visit_points(visits: u32) -> u32 {
    visits.min(4)
}

pub fn lace_score(inputs: &LaceInputs) -> u32 {
    length_of_stay_points(inputs.length_of_stay_days)
        + if inputs.acute_admission { 3 } else { 0 }
        + charlson_points(inputs.charlson_index)
        + ed_visit_points(inputs.ed_visits_6mo)
}

pub fn lace_classify(score: u32, threshold: u32) -> bool {
    score > threshold
}
