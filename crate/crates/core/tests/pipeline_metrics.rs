use chrono::{Duration, NaiveDate, TimeZone, Utc};
use deteriorate_core::ingest::{
    BatteryLevel, Minute, MinuteSpan, Modality, OutcomeLabel, PatientRecord, SampleSeries, SyncEvent, TimedSample,
};
use deteriorate_core::pipeline_metrics::{
    compliance_check, evaluate_alert_rules, gap_analysis, latency_cdf, reliability_report, yield_report, AlertConfig, AlertReason, CdfPoint,
    ComplianceAlert,
};
use proptest::prelude::*;

fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 3, 1).unwrap()
}

fn series(modality: Modality, minutes: impl IntoIterator<Item = i64>) -> SampleSeries {
    let value = if modality == Modality::HeartRate { 72.0 } else { 0.0 };
    let samples = minutes.into_iter().map(|m| TimedSample::new(Minute(m), value)).collect();
    SampleSeries::new(modality, samples).unwrap()
}

fn record(hr_offsets: Vec<i64>, sync: Vec<SyncEvent>) -> PatientRecord {
    let start = Minute::start_of(day()).0;
    let r = PatientRecord {
        patient_id: "P1".into(),
        heart_rate: series(Modality::HeartRate, hr_offsets.into_iter().map(|m| start + m)),
        steps: series(Modality::Step, (0..1440).map(|m| start + m)),
        sleep_status: SampleSeries::empty(Modality::SleepStatus),
        sleep_summaries: vec![],
        sync_events: sync,
        monitoring_start: day(),
        monitoring_end: day(),
        outcome: OutcomeLabel::new(vec![]),
        lace: None,
    };
    r.validate().unwrap();
    r
}

fn sync_at(capture_min: i64, latency: i64, battery: BatteryLevel) -> SyncEvent {
    let t = Utc.from_utc_datetime(&day().and_hms_opt(0, 0, 0).unwrap()) + Duration::minutes(capture_min);
    SyncEvent::new(t, t + Duration::minutes(latency), battery).unwrap()
}

/// Heart rate missing over [100,160), [1000,1030) and [1430,1440).
fn gappy_patient() -> PatientRecord {
    let present = (0..1440).filter(|m| !((100..160).contains(m) || (1000..1030).contains(m) || *m >= 1430));
    let sync = vec![
        sync_at(15, 1, BatteryLevel::High),
        sync_at(30, 3, BatteryLevel::High),
        sync_at(45, 3, BatteryLevel::Medium),
        sync_at(60, 10, BatteryLevel::Medium),
    ];
    record(present.collect(), sync)
}

#[test]
fn constructed_patient_yield() {
    let y = yield_report(&[gappy_patient()]).unwrap();
    assert_eq!(y.per_patient[0].heart_rate, 1340.0 / 1440.0);
    assert_eq!(y.per_patient[0].steps, 1.0);
    assert_eq!(y.per_patient[0].sleep, 0.0);
}

#[test]
fn constructed_patient_gaps() {
    let r = gappy_patient();
    let a = gap_analysis(&r.heart_rate, r.monitoring_span()).unwrap();
    assert_eq!(a.time_to_failure, vec![100, 840, 400]);
    assert_eq!(a.time_to_recovery, vec![60, 30, 10]);
    let starts: Vec<i64> = a.gaps.iter().map(|g| g.gap_start.0 - Minute::start_of(day()).0).collect();
    assert_eq!(starts, vec![100, 1000, 1430]);

    let rep = reliability_report(&[r], Modality::HeartRate).unwrap();
    assert_eq!(rep.median_ttf, 400.0);
    assert_eq!(rep.median_ttr, 30.0);
    assert_eq!(rep.gap_count, 3);
    assert_eq!(rep.failures_per_patient_day, 3.0);
}

#[test]
fn constructed_patient_latency_cdf() {
    let cdf = latency_cdf(&gappy_patient().sync_events).unwrap();
    assert_eq!(
        cdf.points(),
        &[
            CdfPoint { x: 1.0, cum_fraction: 0.25 },
            CdfPoint { x: 3.0, cum_fraction: 0.75 },
            CdfPoint { x: 10.0, cum_fraction: 1.0 },
        ]
    );
    assert_eq!(cdf.median(), 3.0);
    assert_eq!(cdf.percentile(95.0), 10.0);
}

#[test]
fn heart_rate_count_boundary() {
    let cfg = AlertConfig::default();
    assert_eq!(
        evaluate_alert_rules(5399, Some(BatteryLevel::High), &cfg),
        vec![AlertReason::LowHeartRateCount { observed: 5399 }]
    );
    assert!(evaluate_alert_rules(5400, Some(BatteryLevel::High), &cfg).is_empty());
    assert!(evaluate_alert_rules(5400, None, &cfg).is_empty());
}

#[test]
fn record_level_count_uses_the_calendar_day() {
    let cfg = AlertConfig { min_daily_hr_samples: 1000, ..AlertConfig::default() };
    let sync = vec![sync_at(0, 1, BatteryLevel::High)];
    let at = |n: i64| compliance_check(&record((0..n).collect(), sync.clone()), day(), &cfg);
    assert_eq!(at(999).len(), 1);
    assert_eq!(at(999)[0].reason, AlertReason::LowHeartRateCount { observed: 999 });
    assert!(at(1000).is_empty());
}

#[test]
fn battery_boundary() {
    let cfg = AlertConfig::default();
    let full: Vec<i64> = (0..1440).collect();
    let check = |b: BatteryLevel| compliance_check(&record(full.clone(), vec![sync_at(0, 1, b)]), day(), &cfg);
    let battery_alerts = |alerts: &[ComplianceAlert]| {
        alerts.iter().filter(|a| matches!(a.reason, AlertReason::LowBattery { .. })).count()
    };
    assert_eq!(battery_alerts(&check(BatteryLevel::Medium)), 0);
    assert_eq!(battery_alerts(&check(BatteryLevel::High)), 0);
    let low = check(BatteryLevel::Low);
    assert!(low.iter().any(|a| a.reason == AlertReason::LowBattery { observed: BatteryLevel::Low }));
    assert_eq!(battery_alerts(&check(BatteryLevel::Empty)), 1);
}

#[test]
fn latest_arrived_battery_wins() {
    let full: Vec<i64> = (0..1440).collect();
    let sync = vec![sync_at(10, 1, BatteryLevel::Low), sync_at(20, 1, BatteryLevel::Medium)];
    let cfg = AlertConfig { min_daily_hr_samples: 1440, ..AlertConfig::default() };
    let alerts = compliance_check(&record(full, sync), day(), &cfg);
    assert!(alerts.is_empty(), "{alerts:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn runs_and_gaps_cover_the_span(mask in prop::collection::vec(any::<bool>(), 1..2000), offset in -5000i64..5000) {
        let minutes: Vec<i64> = mask.iter().enumerate().filter(|(_, p)| **p).map(|(i, _)| offset + i as i64).collect();
        let span = MinuteSpan::new(Minute(offset), Minute(offset + mask.len() as i64));
        let a = gap_analysis(&series(Modality::HeartRate, minutes), span).unwrap();
        let total: i64 = a.time_to_failure.iter().sum::<i64>() + a.time_to_recovery.iter().sum::<i64>();
        prop_assert_eq!(total, span.len());
        prop_assert!(a.time_to_failure.len().abs_diff(a.time_to_recovery.len()) <= 1);
    }
}
