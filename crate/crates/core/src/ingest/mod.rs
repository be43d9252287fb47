//! Hourly grid data: CSV parsing, capacity estimation and instance assembly.

mod assemble;
mod config;
mod estimate;
pub mod fixture;

pub use assemble::{assemble_instance, InstanceTemplate};
pub use config::{
    ColumnMap, CostConfig, FixedOutput, ShortageCost, TransmissionCost, WOO2021_SHORTAGE_COST,
};
pub use estimate::{
    estimate_fixed_output, estimate_generator_capacity, estimate_transmission_capacity, Window,
};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ValidationReport;
use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("bad config: {0}")]
    Config(String),
    #[error("missing inputs:\n  {}", .0.join("\n  "))]
    Gaps(Vec<String>),
    #[error("no scenarios for slice {0}")]
    NoScenarios(String),
    #[error("assembled instance failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Series {
    Demand,
    NetGeneration(String),
    /// Net flow towards the named region; negative values flow the other way.
    Interchange(String),
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Series::Demand => write!(f, "demand"),
            Series::NetGeneration(fuel) => write!(f, "net_generation:{fuel}"),
            Series::Interchange(to) => write!(f, "interchange:{to}"),
        }
    }
}

impl FromStr for Series {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "demand" => Ok(Series::Demand),
            Some(("net_generation", fuel)) if !fuel.is_empty() => {
                Ok(Series::NetGeneration(fuel.to_string()))
            }
            Some(("interchange", to)) if !to.is_empty() => Ok(Series::Interchange(to.to_string())),
            _ => Err(format!("unknown series {s:?}")),
        }
    }
}

impl Serialize for Series {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Series {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub region: String,
    pub series: Series,
}

impl SeriesKey {
    pub fn new(region: &str, series: Series) -> Self {
        Self {
            region: region.to_string(),
            series,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectReason {
    Columns,
    Timestamp,
    Region,
    Series,
    Value,
    Duplicate,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::Columns => "columns",
            RejectReason::Timestamp => "timestamp",
            RejectReason::Region => "region",
            RejectReason::Series => "series",
            RejectReason::Value => "value",
            RejectReason::Duplicate => "duplicate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line in the source, header included.
    pub row: u64,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub region: String,
    pub series: Series,
    pub first: DateTime<Utc>,
    pub last: DateTime<Utc>,
    pub count: usize,
    /// Missing hours between first and last.
    pub gaps: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub series: BTreeMap<SeriesKey, BTreeMap<DateTime<Utc>, f64>>,
}

impl Dataset {
    /// Insert one record; returns false and leaves the dataset unchanged on a duplicate key.
    pub fn insert(&mut self, key: SeriesKey, at: DateTime<Utc>, value: f64) -> bool {
        let values = self.series.entry(key).or_default();
        if values.contains_key(&at) {
            return false;
        }
        values.insert(at, value);
        true
    }

    pub fn get(&self, region: &str, series: &Series) -> Option<&BTreeMap<DateTime<Utc>, f64>> {
        self.series.get(&SeriesKey::new(region, series.clone()))
    }

    /// Merge another dataset; colliding records keep the existing value and are returned.
    pub fn merge(&mut self, other: Dataset) -> Vec<(SeriesKey, DateTime<Utc>)> {
        let mut dupes = Vec::new();
        for (key, values) in other.series {
            for (at, v) in values {
                if !self.insert(key.clone(), at, v) {
                    dupes.push((key.clone(), at));
                }
            }
        }
        dupes
    }

    pub fn len(&self) -> usize {
        self.series.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Regions that report demand, sorted.
    pub fn regions(&self) -> Vec<String> {
        self.series
            .keys()
            .filter(|k| k.series == Series::Demand)
            .map(|k| k.region.clone())
            .collect()
    }

    pub fn last_timestamp(&self) -> Option<DateTime<Utc>> {
        self.series
            .values()
            .filter_map(|v| v.keys().next_back())
            .max()
            .copied()
    }

    pub fn coverage(&self) -> Vec<Coverage> {
        self.series
            .iter()
            .filter_map(|(k, v)| {
                let first = *v.keys().next()?;
                let last = *v.keys().next_back()?;
                let span = ((last - first).num_hours() + 1) as usize;
                Some(Coverage {
                    region: k.region.clone(),
                    series: k.series.clone(),
                    first,
                    last,
                    count: v.len(),
                    gaps: span - v.len(),
                })
            })
            .collect()
    }

    /// Series with no record inside `window`.
    pub fn window_warnings(&self, window: &Window) -> Vec<String> {
        self.series
            .iter()
            .filter(|(_, v)| v.range(window.range()).next().is_none())
            .map(|(k, _)| format!("{} {}: no data in estimation window", k.region, k.series))
            .collect()
    }
}

/// Parse an ISO-8601 UTC timestamp and truncate it to the hour.
///
/// Accepts RFC 3339, `2021-07-01T05:00Z`, `2021-07-01T05Z` and the bare-hour
/// form `2021-07-01T05`.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    let t = if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        t.with_timezone(&Utc)
    } else {
        let naive = s.strip_suffix('Z').unwrap_or(s);
        [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%d %H:%M",
        ]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(naive, f).ok())
        .or_else(|| NaiveDateTime::parse_from_str(&format!("{naive}:00"), "%Y-%m-%dT%H:%M").ok())?
        .and_utc()
    };
    t.with_minute(0)?.with_second(0)?.with_nanosecond(0)
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%MZ").to_string()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub dataset: Dataset,
    pub rejects: Vec<Reject>,
}

/// Read long-format hourly records: one row per (timestamp, region, series, value).
///
/// Bad rows become rejects; only an unreadable header or stream is an error.
pub fn parse_hourly_csv<R: Read>(input: R, map: &ColumnMap) -> Result<ParseOutcome, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::Header(format!("column {name:?} not found in {headers:?}")))
    };
    let c_time = find(&map.timestamp)?;
    let c_region = find(&map.region)?;
    let c_series = find(&map.series)?;
    let c_value = find(&map.value)?;
    let c_detail = map.detail.as_deref().map(find).transpose()?;

    let mut out = ParseOutcome::default();
    let mut record = csv::StringRecord::new();
    loop {
        let more = match reader.read_record(&mut record) {
            Ok(more) => more,
            Err(e) => {
                let row = e.position().map_or(0, |p| p.line());
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(e.into());
                }
                out.rejects.push(Reject {
                    row,
                    reason: RejectReason::Columns,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        if !more {
            break;
        }
        let row = record.position().map_or(0, |p| p.line());
        let reject = |reason, detail: String| Reject {
            row,
            reason,
            detail,
        };
        let field = |i: usize| record.get(i);
        let (Some(ts), Some(region), Some(series), Some(value)) = (
            field(c_time),
            field(c_region),
            field(c_series),
            field(c_value),
        ) else {
            out.rejects.push(reject(
                RejectReason::Columns,
                format!("{} fields", record.len()),
            ));
            continue;
        };
        let Some(at) = parse_timestamp(ts) else {
            out.rejects
                .push(reject(RejectReason::Timestamp, ts.to_string()));
            continue;
        };
        if region.is_empty() || region.contains([':', '>']) {
            out.rejects
                .push(reject(RejectReason::Region, region.to_string()));
            continue;
        }
        let series_text = match c_detail.and_then(field).filter(|d| !d.is_empty()) {
            Some(detail) => format!("{series}:{detail}"),
            None => series.to_string(),
        };
        let series = match series_text.parse::<Series>() {
            Ok(s) => s,
            Err(e) => {
                out.rejects.push(reject(RejectReason::Series, e));
                continue;
            }
        };
        let value = match value.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                out.rejects
                    .push(reject(RejectReason::Value, value.to_string()));
                continue;
            }
        };
        if !out
            .dataset
            .insert(SeriesKey::new(region, series.clone()), at, value)
        {
            out.rejects.push(reject(
                RejectReason::Duplicate,
                format!("{region} {series} {}", format_timestamp(&at)),
            ));
        }
    }
    Ok(out)
}

/// Write a dataset in the long format read by [`parse_hourly_csv`] with the default column map.
pub fn write_hourly_csv<W: std::io::Write>(ds: &Dataset, out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "region", "series", "value"])?;
    // time-major order, like a real feed
    let mut rows: Vec<(DateTime<Utc>, &SeriesKey, f64)> = ds
        .series
        .iter()
        .flat_map(|(k, v)| v.iter().map(move |(t, x)| (*t, k, *x)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
    for (t, k, v) in rows {
        w.write_record([
            format_timestamp(&t),
            k.region.clone(),
            k.series.to_string(),
            v.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Every hour from `start` (inclusive) to `end` (exclusive).
pub fn hours_between(
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> impl Iterator<Item = DateTime<Utc>> {
    let n = (end - start).num_hours().max(0);
    (0..n).map(move |h| start + Duration::hours(h))
}
