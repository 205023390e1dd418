//! Delimited-text readers and writers for intraday, sleep-summary and sync-log files.

use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::time::Minute;
use super::types::{BatteryLevel, Modality, SampleSeries, SleepEpisodeSummary, SyncEvent, TimedSample};
use crate::error::{Error, Result};

pub const INTRADAY_HEADER: [&str; 2] = ["timestamp", "value"];
pub const SLEEP_HEADER: [&str; 9] = [
    "date",
    "time_in_bed",
    "min_to_fall_asleep",
    "min_asleep",
    "min_awake",
    "min_after_wakeup",
    "awake_count",
    "restless_count",
    "restless_duration",
];
pub const SYNC_HEADER: [&str; 3] = ["capture_time", "arrival_time", "battery"];

/// A row dropped at parse time because its value is out of range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSeries {
    pub series: SampleSeries,
    pub rejected: Vec<RejectedRow>,
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<bool> {
    let header = rdr.headers()?;
    if header.is_empty() || (header.len() == 1 && header.get(0) == Some("")) {
        return Ok(false);
    }
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(true)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, line: u64) -> Result<&'a str> {
    record.get(idx).ok_or_else(|| Error::Parse { line, message: format!("missing column {}", idx + 1) })
}

/// Reads an intraday `timestamp,value` file for one modality.
///
/// Out-of-range heart-rate and step values are dropped and reported; a
/// malformed timestamp, a non-increasing timestamp or an invalid sleep level
/// fails the whole file.
pub fn parse_intraday<R: Read>(input: R, modality: Modality) -> Result<ParsedSeries> {
    let mut rdr = reader(input);
    let mut samples: Vec<TimedSample> = Vec::new();
    let mut rejected = Vec::new();
    if !check_header(&mut rdr, &INTRADAY_HEADER)? {
        return Ok(ParsedSeries { series: SampleSeries::empty(modality), rejected });
    }
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let ts_text = field(&record, 0, line)?;
        let timestamp = Minute::parse_iso(ts_text)
            .ok_or_else(|| Error::Parse { line, message: format!("malformed timestamp `{ts_text}`") })?;
        let value_text = field(&record, 1, line)?;
        let value: f64 = value_text
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("malformed value `{value_text}`") })?;
        if let Some(prev) = samples.last() {
            if timestamp <= prev.timestamp {
                return Err(Error::Ordering { line, timestamp: ts_text.to_string() });
            }
        }
        if let Err(reason) = modality.check_value(value) {
            if modality == Modality::SleepStatus {
                return Err(Error::Domain(format!("line {line}: {reason}")));
            }
            rejected.push(RejectedRow { line, reason });
            continue;
        }
        samples.push(TimedSample::new(timestamp, value));
    }
    Ok(ParsedSeries { series: SampleSeries::new(modality, samples)?, rejected })
}

pub fn write_intraday<W: Write>(series: &SampleSeries, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(INTRADAY_HEADER)?;
    for s in series.samples() {
        wtr.write_record([s.timestamp.format_iso(), s.value.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_u32(record: &csv::StringRecord, idx: usize, line: u64) -> Result<u32> {
    let text = field(record, idx, line)?;
    text.parse()
        .map_err(|_| Error::Parse { line, message: format!("column {}: `{text}` is not a non-negative integer", SLEEP_HEADER[idx]) })
}

pub fn parse_sleep_summaries<R: Read>(input: R) -> Result<Vec<SleepEpisodeSummary>> {
    let mut rdr = reader(input);
    let mut out = Vec::new();
    if !check_header(&mut rdr, &SLEEP_HEADER)? {
        return Ok(out);
    }
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let date_text = field(&record, 0, line)?;
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
            .map_err(|_| Error::Parse { line, message: format!("malformed date `{date_text}`") })?;
        let summary = SleepEpisodeSummary {
            date,
            time_in_bed: parse_u32(&record, 1, line)?,
            min_to_fall_asleep: parse_u32(&record, 2, line)?,
            min_asleep: parse_u32(&record, 3, line)?,
            min_awake: parse_u32(&record, 4, line)?,
            min_after_wakeup: parse_u32(&record, 5, line)?,
            awake_count: parse_u32(&record, 6, line)?,
            restless_count: parse_u32(&record, 7, line)?,
            restless_duration: parse_u32(&record, 8, line)?,
        };
        summary.validate().map_err(|e| Error::Parse { line, message: e.to_string() })?;
        out.push(summary);
    }
    Ok(out)
}

pub fn write_sleep_summaries<W: Write>(summaries: &[SleepEpisodeSummary], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SLEEP_HEADER)?;
    for s in summaries {
        wtr.write_record([
            s.date.format("%Y-%m-%d").to_string(),
            s.time_in_bed.to_string(),
            s.min_to_fall_asleep.to_string(),
            s.min_asleep.to_string(),
            s.min_awake.to_string(),
            s.min_after_wakeup.to_string(),
            s.awake_count.to_string(),
            s.restless_count.to_string(),
            s.restless_duration.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_instant(text: &str, line: u64) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|_| Error::Parse { line, message: format!("malformed timestamp `{text}`") })
}

pub fn parse_sync_log<R: Read>(input: R) -> Result<Vec<SyncEvent>> {
    let mut rdr = reader(input);
    let mut out = Vec::new();
    if !check_header(&mut rdr, &SYNC_HEADER)? {
        return Ok(out);
    }
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let capture = parse_instant(field(&record, 0, line)?, line)?;
        let arrival = parse_instant(field(&record, 1, line)?, line)?;
        let battery: BatteryLevel = field(&record, 2, line)?
            .parse()
            .map_err(|e: Error| Error::Parse { line, message: e.to_string() })?;
        out.push(SyncEvent::new(capture, arrival, battery).map_err(|e| Error::Parse { line, message: e.to_string() })?);
    }
    Ok(out)
}

pub fn write_sync_log<W: Write>(events: &[SyncEvent], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SYNC_HEADER)?;
    for e in events {
        wtr.write_record([
            e.capture_time.to_rfc3339_opts(SecondsFormat::Secs, true),
            e.arrival_time.to_rfc3339_opts(SecondsFormat::Secs, true),
            e.battery.as_str().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_rows_become_two_samples() {
        let text = "timestamp,value\n2017-03-01T00:00Z,72\n2017-03-01T00:01Z,75\n";
        let parsed = parse_intraday(text.as_bytes(), Modality::HeartRate).unwrap();
        assert_eq!(parsed.series.len(), 2);
        assert_eq!(parsed.series.samples()[1].value, 75.0);
        assert!(parsed.rejected.is_empty());
    }

    #[test]
    fn empty_file_is_empty_series() {
        let parsed = parse_intraday("".as_bytes(), Modality::Step).unwrap();
        assert!(parsed.series.is_empty());
        let parsed = parse_intraday("timestamp,value\n".as_bytes(), Modality::Step).unwrap();
        assert!(parsed.series.is_empty());
    }

    #[test]
    fn out_of_range_heart_rate_is_rejected_with_line() {
        let text = "timestamp,value\n2017-03-01T00:00Z,72\n2017-03-01T00:01Z,500\n2017-03-01T00:02Z,74\n";
        let parsed = parse_intraday(text.as_bytes(), Modality::HeartRate).unwrap();
        assert_eq!(parsed.series.len(), 2);
        assert_eq!(parsed.rejected.len(), 1);
        assert_eq!(parsed.rejected[0].line, 3);
    }

    #[test]
    fn malformed_timestamp_reports_line() {
        let text = "timestamp,value\n2017-03-01T00:00Z,72\nnoon,75\n";
        match parse_intraday(text.as_bytes(), Modality::HeartRate) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_monotone_is_ordering_error() {
        let text = "timestamp,value\n2017-03-01T00:05Z,72\n2017-03-01T00:01Z,75\n";
        assert!(matches!(parse_intraday(text.as_bytes(), Modality::HeartRate), Err(Error::Ordering { line: 3, .. })));
    }

    #[test]
    fn bad_sleep_level_is_domain_error() {
        let text = "timestamp,value\n2017-03-01T00:00Z,4\n";
        assert!(matches!(parse_intraday(text.as_bytes(), Modality::SleepStatus), Err(Error::Domain(_))));
    }

    #[test]
    fn sleep_and_sync_round_trip() {
        let sleep = "date,time_in_bed,min_to_fall_asleep,min_asleep,min_awake,min_after_wakeup,awake_count,restless_count,restless_duration\n2017-03-02,480,10,420,40,10,3,5,20\n";
        let parsed = parse_sleep_summaries(sleep.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_sleep_summaries(&parsed, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), sleep);

        let sync = "capture_time,arrival_time,battery\n2017-03-01T00:00:00Z,2017-03-01T00:08:33Z,medium\n";
        let events = parse_sync_log(sync.as_bytes()).unwrap();
        assert!((events[0].latency_minutes() - 8.55).abs() < 1e-12);
        let mut out = Vec::new();
        write_sync_log(&events, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), sync);
    }

    #[test]
    fn sync_arrival_before_capture_rejected() {
        let sync = "capture_time,arrival_time,battery\n2017-03-01T00:10:00Z,2017-03-01T00:08:00Z,high\n";
        assert!(parse_sync_log(sync.as_bytes()).is_err());
    }

    fn canonical_rows() -> impl Strategy<Value = Vec<(i64, u32)>> {
        prop::collection::vec((1i64..120, 0u32..300), 0..60)
    }

    proptest! {
        #[test]
        fn serialize_parse_is_bit_exact(rows in canonical_rows()) {
            let mut text = String::from("timestamp,value\n");
            let mut t = 24_000_000i64;
            for (step, v) in &rows {
                t += step;
                text.push_str(&format!("{},{}\n", Minute(t).format_iso(), *v as f64));
            }
            let parsed = parse_intraday(text.as_bytes(), Modality::Step).unwrap();
            prop_assert!(parsed.series.samples().windows(2).all(|w| w[0].timestamp < w[1].timestamp));
            let mut out = Vec::new();
            write_intraday(&parsed.series, &mut out).unwrap();
            prop_assert_eq!(String::from_utf8(out).unwrap(), text);
        }
    }
}
