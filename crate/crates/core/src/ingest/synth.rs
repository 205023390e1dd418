//! Seeded synthetic cohorts with a controllable deterioration signal.
//!
//! Each patient gets per-minute heart rate, steps and sleep status plus
//! nightly sleep summaries and a sync log. Deteriorated patients carry two
//! independent, separately scaled signals:
//!
//! * an acute pre-event signal in the three days before each deterioration
//!   date (rising heart rate, fewer steps, fragmented sleep), scaled by
//!   `anomaly_signal_strength`;
//! * a persistent baseline shift over the whole monitoring period with the
//!   same direction, scaled by `risk_signal_strength`.
//!
//! LACE inputs are drawn from their own stream and never depend on outcome.

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::time::{Minute, MINUTES_PER_DAY};
use super::types::{
    BatteryLevel, Modality, OutcomeLabel, PatientRecord, SampleSeries, SleepEpisodeSummary, SyncEvent, TimedSample,
};
use crate::error::{Error, Result};
use crate::models::lace::LaceInputs;

/// Days before a deterioration date that carry the acute signal.
pub const ACUTE_SIGNAL_DAYS: i64 = 3;

/// Per-minute dropout process for one stream.
///
/// A two-state chain: `missing_rate` is the stationary fraction of missing
/// minutes and `mean_gap_minutes` the mean length of a gap. With no mean gap
/// the dropout is independent per minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    pub missing_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_gap_minutes: Option<f64>,
}

impl Dropout {
    pub fn bernoulli(missing_rate: f64) -> Self {
        Self { missing_rate, mean_gap_minutes: None }
    }

    pub fn bursty(missing_rate: f64, mean_gap_minutes: f64) -> Self {
        Self { missing_rate, mean_gap_minutes: Some(mean_gap_minutes) }
    }

    /// `(p_enter_gap, p_leave_gap)` per minute.
    pub fn transition_probabilities(&self) -> (f64, f64) {
        let m = self.missing_rate;
        if m <= 0.0 {
            return (0.0, 1.0);
        }
        if m >= 1.0 {
            return (1.0, 0.0);
        }
        match self.mean_gap_minutes {
            None => (m, 1.0 - m),
            Some(g) => {
                let leave = (1.0 / g.max(1.0)).min(1.0);
                let enter = (leave * m / (1.0 - m)).min(1.0);
                (enter, leave)
            }
        }
    }

    fn mask(&self, minutes: usize, rng: &mut impl Rng) -> Vec<bool> {
        let (enter, leave) = self.transition_probabilities();
        let mut missing = rng.random::<f64>() < self.missing_rate;
        let mut out = Vec::with_capacity(minutes);
        for _ in 0..minutes {
            out.push(missing);
            let p = if missing { 1.0 - leave } else { enter };
            missing = rng.random::<f64>() < p;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Missingness {
    pub heart_rate: Dropout,
    pub steps: Dropout,
    /// Probability that a patient's device never reports sleep.
    pub sleep_device: f64,
    /// Probability that a single night is not recorded.
    pub sleep_night: f64,
}

impl Default for Missingness {
    fn default() -> Self {
        Self {
            heart_rate: Dropout::bursty(0.3, 4.0),
            steps: Dropout::bernoulli(0.08),
            sleep_device: 0.16,
            sleep_night: 0.1,
        }
    }
}

impl Missingness {
    pub fn none() -> Self {
        Self {
            heart_rate: Dropout::bernoulli(0.0),
            steps: Dropout::bernoulli(0.0),
            sleep_device: 0.0,
            sleep_night: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub n_deteriorated: usize,
    pub days_per_patient: u32,
    pub anomaly_signal_strength: f64,
    pub risk_signal_strength: f64,
    /// Streams that carry the injected signals.
    pub signal_modalities: Vec<Modality>,
    pub missingness: Missingness,
    pub sync_cadence_minutes: u32,
    /// Scale of the heavy-tailed upload delay; zero means arrival at sync time.
    pub latency_noise_minutes: f64,
    pub start_date: NaiveDate,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 25,
            n_deteriorated: 7,
            days_per_patient: 30,
            anomaly_signal_strength: 1.0,
            risk_signal_strength: 1.0,
            signal_modalities: Modality::ALL.to_vec(),
            missingness: Missingness::default(),
            sync_cadence_minutes: 15,
            latency_noise_minutes: 5.0,
            start_date: NaiveDate::from_ymd_opt(2017, 1, 2).expect("valid date"),
            rng_seed: 2017,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_patients == 0 {
            return Err(Error::config("n_patients must be positive"));
        }
        if self.days_per_patient == 0 {
            return Err(Error::config("days_per_patient must be positive"));
        }
        if self.n_deteriorated > self.n_patients {
            return Err(Error::config("n_deteriorated exceeds n_patients"));
        }
        if i64::from(self.days_per_patient) > OutcomeLabel::HORIZON_DAYS {
            return Err(Error::config("days_per_patient exceeds the 60-day horizon"));
        }
        if self.sync_cadence_minutes == 0 {
            return Err(Error::config("sync_cadence_minutes must be positive"));
        }
        let m = &self.missingness;
        for (name, rate) in [
            ("heart_rate", m.heart_rate.missing_rate),
            ("steps", m.steps.missing_rate),
            ("sleep_device", m.sleep_device),
            ("sleep_night", m.sleep_night),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::config(format!("missingness rate `{name}` = {rate} outside [0,1]")));
            }
        }
        if self.anomaly_signal_strength < 0.0 || self.risk_signal_strength < 0.0 {
            return Err(Error::config("signal strengths must be non-negative"));
        }
        if self.latency_noise_minutes < 0.0 {
            return Err(Error::config("latency_noise_minutes must be non-negative"));
        }
        Ok(())
    }

    fn carries(&self, modality: Modality) -> bool {
        self.signal_modalities.contains(&modality)
    }
}

/// Generates the cohort described by `config`. Identical configs give identical cohorts.
pub fn generate_synthetic_cohort(config: &SynthConfig) -> Result<Vec<PatientRecord>> {
    config.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut flags: Vec<bool> = (0..config.n_patients).map(|i| i < config.n_deteriorated).collect();
    flags.shuffle(&mut master);

    (0..config.n_patients)
        .into_par_iter()
        .map(|i| generate_patient(config, i, flags[i]))
        .collect()
}

fn stream(config: &SynthConfig, patient: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(((patient as u64) << 8) | lane);
    rng
}

struct Physiology {
    rest_hr: f64,
    active_rate: f64,
    activity_propensity: f64,
    restless_propensity: f64,
}

/// Daily signal intensities for one patient.
struct DaySignal {
    hr_shift: f64,
    step_factor: f64,
    fragmentation: f64,
}

fn generate_patient(config: &SynthConfig, index: usize, deteriorated: bool) -> Result<PatientRecord> {
    let patient_id = format!("P{:03}", index + 1);
    let start = config.start_date;
    let days = config.days_per_patient;
    let end = start + Duration::days(i64::from(days) - 1);

    let mut rng = stream(config, index, 0);
    let phys = Physiology {
        rest_hr: Normal::new(68.0f64, 7.0).expect("valid").sample(&mut rng).clamp(50.0, 95.0),
        active_rate: rng.random_range(40.0..90.0),
        activity_propensity: rng.random_range(0.08..0.25),
        restless_propensity: rng.random_range(0.02..0.06),
    };

    let mut event_dates = Vec::new();
    if deteriorated {
        let lo = 5.min(i64::from(days) - 1);
        let first = rng.random_range(lo..i64::from(days).max(lo + 1));
        event_dates.push(start + Duration::days(first));
        if rng.random::<f64>() < 0.3 && first + 5 < i64::from(days) {
            let second = rng.random_range(first + 5..i64::from(days));
            event_dates.push(start + Duration::days(second));
        }
    }
    let outcome = OutcomeLabel::new(event_dates);

    let signal_for = |date: NaiveDate| -> DaySignal {
        let mut acute = 0.0;
        for d in &outcome.deterioration_dates {
            let lead = (*d - date).num_days();
            if (1..=ACUTE_SIGNAL_DAYS).contains(&lead) {
                let ramp = (ACUTE_SIGNAL_DAYS - lead + 1) as f64 / ACUTE_SIGNAL_DAYS as f64;
                acute = f64::max(acute, ramp);
            }
        }
        let a = config.anomaly_signal_strength * acute;
        let r = if deteriorated { config.risk_signal_strength } else { 0.0 };
        DaySignal {
            hr_shift: if config.carries(Modality::HeartRate) { 12.0 * a + 6.0 * r } else { 0.0 },
            step_factor: if config.carries(Modality::Step) { (-(0.9 * a + 0.5 * r)).exp() } else { 1.0 },
            fragmentation: if config.carries(Modality::SleepStatus) { 1.0 + 2.0 * a + 1.0 * r } else { 1.0 },
        }
    };

    // Nightly schedule: bedtime on day d (minutes after midnight), wake on day d+1.
    let mut schedule_rng = stream(config, index, 1);
    let total_minutes = (i64::from(days) * MINUTES_PER_DAY) as usize;
    let span_start = Minute::start_of(start);
    let mut awake = vec![true; total_minutes];
    let mut wake_minute = Vec::with_capacity(days as usize);
    let mut bed_minute = Vec::with_capacity(days as usize);
    for d in 0..days as i64 {
        let wake = 7 * 60 + schedule_rng.random_range(0..90) as i64;
        let bed = 21 * 60 + 30 + schedule_rng.random_range(0..120) as i64;
        wake_minute.push(d * MINUTES_PER_DAY + wake);
        bed_minute.push(d * MINUTES_PER_DAY + bed);
    }
    for d in 0..days as usize {
        let from = if d == 0 { 0 } else { bed_minute[d - 1] as usize };
        let to = wake_minute[d] as usize;
        awake[from.min(total_minutes)..to.min(total_minutes)].iter_mut().for_each(|a| *a = false);
    }
    let last_bed = bed_minute[days as usize - 1] as usize;
    awake[last_bed.min(total_minutes)..].iter_mut().for_each(|a| *a = false);

    // Steps.
    let mut step_rng = stream(config, index, 2);
    let mut steps = vec![0.0f64; total_minutes];
    let mut active = false;
    for (t, slot) in steps.iter_mut().enumerate() {
        let date = start + Duration::days(t as i64 / MINUTES_PER_DAY);
        let sig = signal_for(date);
        if awake[t] {
            let p_on = phys.activity_propensity * sig.step_factor;
            active = if active { step_rng.random::<f64>() > 0.3 } else { step_rng.random::<f64>() < p_on };
            if active {
                let lambda = (phys.active_rate * sig.step_factor).max(1.0);
                let draw: f64 = Poisson::new(lambda).expect("positive rate").sample(&mut step_rng);
                *slot = draw.max(1.0);
            }
        } else {
            active = false;
            if step_rng.random::<f64>() < 0.004 {
                *slot = step_rng.random_range(1..6) as f64;
            }
        }
    }

    // Heart rate follows activity and sleep.
    let mut hr_rng = stream(config, index, 3);
    let noise = Normal::new(0.0, 2.0).expect("valid");
    let mut ar = 0.0;
    let mut hr = vec![0.0f64; total_minutes];
    for t in 0..total_minutes {
        let date = start + Duration::days(t as i64 / MINUTES_PER_DAY);
        let sig = signal_for(date);
        ar = 0.9 * ar + noise.sample(&mut hr_rng);
        let circadian = if awake[t] { 0.0 } else { -8.0 };
        let exertion = (0.3 * steps[t]).min(45.0);
        hr[t] = (phys.rest_hr + sig.hr_shift + circadian + exertion + ar).clamp(30.0, 240.0).round();
    }

    // Sleep status and summaries.
    let mut sleep_rng = stream(config, index, 4);
    let has_sleep_device = sleep_rng.random::<f64>() >= config.missingness.sleep_device;
    let mut sleep_samples = Vec::new();
    let mut sleep_summaries = Vec::new();
    if has_sleep_device {
        for d in 0..(days as usize).saturating_sub(1) {
            let from = bed_minute[d];
            let to = wake_minute[d + 1];
            let skip = sleep_rng.random::<f64>() < config.missingness.sleep_night;
            let wake_date = start + Duration::days(d as i64 + 1);
            let frag = signal_for(wake_date).fragmentation;
            let (levels, summary) = simulate_night(&mut sleep_rng, (to - from) as u32, wake_date, &phys, frag);
            if skip {
                continue;
            }
            for (k, level) in levels.into_iter().enumerate() {
                sleep_samples.push(TimedSample::new(span_start.offset(from + k as i64), f64::from(level)));
            }
            sleep_summaries.push(summary);
        }
    }

    // Dropout.
    let mut drop_rng = stream(config, index, 5);
    let hr_missing = config.missingness.heart_rate.mask(total_minutes, &mut drop_rng);
    let step_missing = config.missingness.steps.mask(total_minutes, &mut drop_rng);
    let hr_samples: Vec<TimedSample> = (0..total_minutes)
        .filter(|&t| !hr_missing[t])
        .map(|t| TimedSample::new(span_start.offset(t as i64), hr[t]))
        .collect();
    let step_samples: Vec<TimedSample> = (0..total_minutes)
        .filter(|&t| !step_missing[t])
        .map(|t| TimedSample::new(span_start.offset(t as i64), steps[t]))
        .collect();

    let sync_events = simulate_sync(config, &mut stream(config, index, 6), span_start, total_minutes as i64)?;

    let mut lace_rng = stream(config, index, 7);
    let lace = LaceInputs {
        length_of_stay_days: 1 + Poisson::new(4.0).expect("valid").sample(&mut lace_rng) as u32,
        acute_admission: lace_rng.random::<f64>() < 0.7,
        charlson_index: (Poisson::new(2.0).expect("valid").sample(&mut lace_rng) as u32).min(8),
        ed_visits_6mo: (Poisson::new(0.8).expect("valid").sample(&mut lace_rng) as u32).min(6),
    };

    let record = PatientRecord {
        patient_id,
        heart_rate: SampleSeries::new(Modality::HeartRate, hr_samples)?,
        steps: SampleSeries::new(Modality::Step, step_samples)?,
        sleep_status: SampleSeries::new(Modality::SleepStatus, sleep_samples)?,
        sleep_summaries,
        sync_events,
        monitoring_start: start,
        monitoring_end: end,
        outcome,
        lace: Some(lace),
    };
    record.validate()?;
    Ok(record)
}

/// Minute-level sleep levels for one night and the matching summary.
fn simulate_night(
    rng: &mut ChaCha8Rng,
    in_bed: u32,
    wake_date: NaiveDate,
    phys: &Physiology,
    fragmentation: f64,
) -> (Vec<u8>, SleepEpisodeSummary) {
    let fall = rng.random_range(3..25).min(in_bed / 4);
    let after = rng.random_range(0..15).min(in_bed / 4);
    let core = in_bed - fall - after;
    let p_restless = (phys.restless_propensity * fragmentation).min(0.5);
    let p_awake = (0.006 * fragmentation).min(0.2);
    let mut levels = Vec::with_capacity(in_bed as usize);
    levels.extend(std::iter::repeat_n(3u8, fall as usize));
    let mut state = 1u8;
    for _ in 0..core {
        state = match state {
            1 => {
                let u: f64 = rng.random();
                if u < p_awake {
                    3
                } else if u < p_awake + p_restless {
                    2
                } else {
                    1
                }
            }
            2 => {
                if rng.random::<f64>() < 0.5 {
                    1
                } else {
                    2
                }
            }
            _ => {
                if rng.random::<f64>() < 0.3 {
                    1
                } else {
                    3
                }
            }
        };
        levels.push(state);
    }
    levels.extend(std::iter::repeat_n(3u8, after as usize));

    let core_levels = &levels[fall as usize..(fall + core) as usize];
    let count_runs = |target: u8| {
        core_levels.iter().enumerate().filter(|(i, &l)| l == target && (*i == 0 || core_levels[i - 1] != target)).count() as u32
    };
    let min_awake = core_levels.iter().filter(|&&l| l == 3).count() as u32;
    let restless_duration = core_levels.iter().filter(|&&l| l == 2).count() as u32;
    let summary = SleepEpisodeSummary {
        date: wake_date,
        time_in_bed: in_bed,
        min_to_fall_asleep: fall,
        min_asleep: core - min_awake,
        min_awake,
        min_after_wakeup: after,
        awake_count: count_runs(3),
        restless_count: count_runs(2),
        restless_duration,
    };
    (levels, summary)
}

fn minute_instant(m: Minute, extra_seconds: i64) -> DateTime<Utc> {
    m.to_datetime() + Duration::seconds(extra_seconds)
}

fn simulate_sync(config: &SynthConfig, rng: &mut ChaCha8Rng, start: Minute, total: i64) -> Result<Vec<SyncEvent>> {
    let cadence = i64::from(config.sync_cadence_minutes);
    let delay = LogNormal::new(0.0, 1.2).expect("valid");
    let mut charge = 100.0f64;
    let mut events = Vec::with_capacity((total / cadence) as usize);
    let mut t = cadence;
    while t < total {
        let capture_offset = rng.random_range(0..cadence * 60);
        let capture = minute_instant(start.offset(t - cadence), capture_offset);
        let mut delay_seconds = 0.0;
        if config.latency_noise_minutes > 0.0 {
            delay_seconds = config.latency_noise_minutes * 60.0 * delay.sample(rng);
            if rng.random::<f64>() < 0.05 {
                delay_seconds += rng.random_range(60.0..1200.0) * 60.0 * (config.latency_noise_minutes / 5.0);
            }
        }
        let sync_time = minute_instant(start.offset(t), 0);
        let arrival = (sync_time + Duration::seconds(delay_seconds.round() as i64))
            .min(minute_instant(start.offset(total), 0) - Duration::seconds(1))
            .max(capture);
        charge -= 0.1;
        if charge < 30.0 && rng.random::<f64>() < 0.02 {
            charge = 100.0;
        }
        charge = charge.max(0.0);
        let battery = match charge {
            c if c > 60.0 => BatteryLevel::High,
            c if c > 30.0 => BatteryLevel::Medium,
            c if c > 5.0 => BatteryLevel::Low,
            _ => BatteryLevel::Empty,
        };
        events.push(SyncEvent::new(capture, arrival, battery)?);
        t += cadence;
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig { n_patients: 4, n_deteriorated: 2, days_per_patient: 6, rng_seed: seed, ..SynthConfig::default() }
    }

    #[test]
    fn rejects_empty_configs() {
        let mut c = small(1);
        c.n_patients = 0;
        assert!(matches!(generate_synthetic_cohort(&c), Err(Error::Config(_))));
        let mut c = small(1);
        c.days_per_patient = 0;
        assert!(matches!(generate_synthetic_cohort(&c), Err(Error::Config(_))));
        let mut c = small(1);
        c.n_deteriorated = 5;
        assert!(generate_synthetic_cohort(&c).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let a = generate_synthetic_cohort(&small(9)).unwrap();
        let b = generate_synthetic_cohort(&small(9)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_cohort(&small(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn label_counts_and_invariants() {
        let cohort = generate_synthetic_cohort(&small(3)).unwrap();
        assert_eq!(cohort.iter().filter(|r| r.outcome.deteriorated()).count(), 2);
        for r in &cohort {
            r.validate().unwrap();
            assert!(r.lace.is_some());
        }
    }

    #[test]
    fn dropout_rates_match_configuration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [Dropout::bernoulli(0.1), Dropout::bursty(0.3, 4.0)] {
            let mask = d.mask(400_000, &mut rng);
            let rate = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
            assert!((rate - d.missing_rate).abs() < 0.01, "{d:?} -> {rate}");
        }
    }

    #[test]
    fn zero_noise_arrival_within_cadence() {
        let mut c = small(5);
        c.latency_noise_minutes = 0.0;
        let cohort = generate_synthetic_cohort(&c).unwrap();
        for r in &cohort {
            for e in &r.sync_events {
                assert!(e.latency_minutes() <= 15.0 + 1e-9);
            }
        }
    }
}
