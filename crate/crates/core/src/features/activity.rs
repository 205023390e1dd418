//! Awake/sleep segmentation of a day's step stream and sedentary bouts.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::{Minute, MinuteSpan, SampleSeries, MINUTES_PER_DAY};

pub const AWAKE_SEARCH_FROM: u32 = 7 * 60;
pub const SLEEP_SEARCH_FROM: u32 = 19 * 60;
pub const LULL_MINUTES: usize = 30;
pub const LULL_STEP_TOTAL: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AwakeWindow {
    pub date: NaiveDate,
    pub awake_time: Minute,
    pub sleep_time: Minute,
}

impl AwakeWindow {
    pub fn span(&self) -> MinuteSpan {
        MinuteSpan::new(self.awake_time, self.sleep_time)
    }

    pub fn len(&self) -> i64 {
        self.span().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SedentaryBout {
    pub start: Minute,
    pub end: Minute,
    pub duration: i64,
}

/// Awake window of `date`, or `None` when no step is taken from 07:00 on.
///
/// Awake time is the first minute at or after 07:00 with a positive step
/// count. Sleep time is the first minute at or after 19:00 (and after awake
/// time) whose preceding 30 minutes total fewer than 10 steps, counting
/// unobserved minutes as zero; without such a lull the window runs to midnight.
pub fn segment_awake(steps: &SampleSeries, date: NaiveDate) -> Option<AwakeWindow> {
    let day = MinuteSpan::day(date);
    let dense = steps.dense(day);
    let awake = (AWAKE_SEARCH_FROM as usize..dense.len()).find(|&m| dense[m].is_some_and(|v| v > 0.0))?;

    let mut prefix = Vec::with_capacity(dense.len() + 1);
    prefix.push(0.0);
    for v in &dense {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + v.unwrap_or(0.0));
    }
    let from = (SLEEP_SEARCH_FROM as usize).max(awake + 1);
    let sleep = (from..dense.len())
        .find(|&t| prefix[t] - prefix[t.saturating_sub(LULL_MINUTES)] < LULL_STEP_TOTAL)
        .unwrap_or(MINUTES_PER_DAY as usize);
    Some(AwakeWindow {
        date,
        awake_time: day.start.offset(awake as i64),
        sleep_time: day.start.offset(sleep as i64),
    })
}

/// Maximal runs of observed zero-step minutes inside `window`.
pub fn extract_sedentary_bouts(steps: &SampleSeries, window: &AwakeWindow) -> Vec<SedentaryBout> {
    let span = window.span();
    bouts_in(&steps.dense(span), span.start)
}

pub(crate) fn bouts_in(dense: &[Option<f64>], origin: Minute) -> Vec<SedentaryBout> {
    let mut bouts = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, v) in dense.iter().chain(std::iter::once(&None)).enumerate() {
        match (v, run_start) {
            (Some(x), None) if *x == 0.0 => run_start = Some(i),
            (Some(x), Some(_)) if *x == 0.0 => {}
            (_, Some(s)) => {
                bouts.push(SedentaryBout {
                    start: origin.offset(s as i64),
                    end: origin.offset(i as i64),
                    duration: (i - s) as i64,
                });
                run_start = None;
            }
            _ => {}
        }
    }
    bouts
}

/// Step accounting for one awake window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityDay {
    pub window: AwakeWindow,
    pub total_steps: f64,
    pub active_minutes: i64,
    pub missing_minutes: i64,
    pub bouts: Vec<SedentaryBout>,
}

impl ActivityDay {
    pub fn observed_minutes(&self) -> i64 {
        self.window.len() - self.missing_minutes
    }
}

pub fn activity_day(steps: &SampleSeries, date: NaiveDate) -> Option<ActivityDay> {
    let window = segment_awake(steps, date)?;
    let span = window.span();
    let dense = steps.dense(span);
    let total_steps = dense.iter().flatten().sum();
    let active_minutes = dense.iter().flatten().filter(|v| **v > 0.0).count() as i64;
    let missing_minutes = dense.iter().filter(|v| v.is_none()).count() as i64;
    Some(ActivityDay {
        window,
        total_steps,
        active_minutes,
        missing_minutes,
        bouts: bouts_in(&dense, span.start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Modality, TimedSample};
    use proptest::prelude::*;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2017, 3, 1).unwrap()
    }

    fn series(values: &[(u32, f64)]) -> SampleSeries {
        let d = date();
        let samples = values.iter().map(|&(m, v)| TimedSample::new(Minute::start_of(d).offset(i64::from(m)), v)).collect();
        SampleSeries::new(Modality::Step, samples).unwrap()
    }

    #[test]
    fn window_from_first_step_to_lull() {
        let mut rows = vec![(6 * 60, 40.0)];
        for m in (7 * 60 + 42)..(21 * 60 + 45) {
            rows.push((m, 12.0));
        }
        for m in (21 * 60 + 45)..1440 {
            rows.push((m, 0.0));
        }
        let w = segment_awake(&series(&rows), date()).unwrap();
        assert_eq!(w.awake_time, Minute::at(date(), 7, 42));
        // [21:45, 22:15) is the first all-zero trailing half hour.
        assert_eq!(w.sleep_time, Minute::at(date(), 22, 15));
    }

    #[test]
    fn all_zero_day_is_undefined() {
        let rows: Vec<(u32, f64)> = (0..1440).map(|m| (m, 0.0)).collect();
        assert!(segment_awake(&series(&rows), date()).is_none());
        assert!(segment_awake(&series(&[]), date()).is_none());
    }

    #[test]
    fn walking_until_midnight() {
        let rows: Vec<(u32, f64)> = (420..1440).map(|m| (m, 1.0)).collect();
        let w = segment_awake(&series(&rows), date()).unwrap();
        // Every trailing half hour after 19:00 totals 30 steps: no lull.
        assert_eq!(w.sleep_time, Minute::start_of(date()).offset(MINUTES_PER_DAY));
    }

    #[test]
    fn bouts_follow_zero_runs() {
        let origin = Minute::start_of(date());
        let dense = [3.0, 0.0, 0.0, 0.0, 5.0, 0.0].map(Some);
        let b = bouts_in(&dense, origin);
        assert_eq!(b.iter().map(|b| b.duration).collect::<Vec<_>>(), vec![3, 1]);
        assert!(bouts_in(&[Some(1.0), Some(2.0)], origin).is_empty());
        let gapped = [Some(0.0), Some(0.0), None, Some(0.0)];
        assert_eq!(bouts_in(&gapped, origin).iter().map(|b| b.duration).collect::<Vec<_>>(), vec![2, 1]);
    }

    fn brute_runs(dense: &[Option<f64>]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < dense.len() {
            if dense[i] == Some(0.0) {
                let s = i;
                while i < dense.len() && dense[i] == Some(0.0) {
                    i += 1;
                }
                out.push((s, i));
            } else {
                i += 1;
            }
        }
        out
    }

    proptest! {
        #[test]
        fn minutes_partition_the_window(cells in prop::collection::vec(prop::option::weighted(0.8, prop_oneof![Just(0.0), 1.0f64..30.0]), 1440)) {
            let rows: Vec<(u32, f64)> = cells.iter().enumerate().filter_map(|(m, v)| v.map(|v| (m as u32, v.round()))).collect();
            let s = series(&rows);
            if let Some(day) = activity_day(&s, date()) {
                prop_assert!(day.window.awake_time < day.window.sleep_time);
                let sedentary: i64 = day.bouts.iter().map(|b| b.duration).sum();
                prop_assert_eq!(sedentary + day.active_minutes + day.missing_minutes, day.window.len());
                let dense = s.dense(day.window.span());
                let expected: Vec<(usize, usize)> = brute_runs(&dense);
                let got: Vec<(usize, usize)> = day.bouts.iter()
                    .map(|b| ((b.start.0 - day.window.awake_time.0) as usize, (b.end.0 - day.window.awake_time.0) as usize))
                    .collect();
                prop_assert_eq!(got, expected);
            }
        }

        #[test]
        fn row_order_does_not_matter(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let rows: Vec<TimedSample> = (400..1300u32)
                .map(|m| TimedSample::new(Minute::start_of(date()).offset(i64::from(m)), f64::from((m * 7 + 3) % 11)))
                .collect();
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = SampleSeries::new(Modality::Step, rows).unwrap();
            let b = SampleSeries::from_unordered(Modality::Step, shuffled).unwrap();
            prop_assert_eq!(segment_awake(&a, date()), segment_awake(&b, date()));
        }
    }
}
