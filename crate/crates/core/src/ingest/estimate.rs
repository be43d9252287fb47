use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use chrono::{DateTime, Duration, Utc};

use super::{Dataset, Series};

/// Trailing estimation window `(end - length, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub end: DateTime<Utc>,
    pub length: Duration,
}

impl Window {
    /// One year ending at the dataset's last record.
    pub fn trailing_year(ds: &Dataset) -> Option<Self> {
        Some(Self {
            end: ds.last_timestamp()?,
            length: Duration::days(365),
        })
    }

    pub fn range(&self) -> RangeInclusive<DateTime<Utc>> {
        (self.end - self.length + Duration::hours(1))..=self.end
    }
}

/// Largest hourly net generation per (region, fuel) inside the window.
///
/// Pairs with no records in the window are absent.
pub fn estimate_generator_capacity(
    ds: &Dataset,
    window: &Window,
) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    for (key, values) in &ds.series {
        if let Series::NetGeneration(fuel) = &key.series {
            let max = values
                .range(window.range())
                .map(|(_, &v)| v)
                .reduce(f64::max);
            if let Some(max) = max {
                out.insert((key.region.clone(), fuel.clone()), max);
            }
        }
    }
    out
}

/// Mean hourly net generation per (region, fuel) inside the window.
pub fn estimate_fixed_output(ds: &Dataset, window: &Window) -> BTreeMap<(String, String), f64> {
    let mut out = BTreeMap::new();
    for (key, values) in &ds.series {
        if let Series::NetGeneration(fuel) = &key.series {
            let (n, sum) = values
                .range(window.range())
                .fold((0usize, 0.0), |(n, s), (_, &v)| (n + 1, s + v));
            if n > 0 {
                out.insert((key.region.clone(), fuel.clone()), sum / n as f64);
            }
        }
    }
    out
}

/// Largest hourly transfer per direction inside the window.
///
/// A positive value in region A's `interchange:B` series is a flow A to B and
/// a negative one a flow B to A. A direction that never carries flow is absent.
pub fn estimate_transmission_capacity(
    ds: &Dataset,
    window: &Window,
) -> BTreeMap<(String, String), f64> {
    let mut out: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut bump = |from: &str, to: &str, v: f64| {
        let e = out.entry((from.to_string(), to.to_string())).or_insert(v);
        *e = e.max(v);
    };
    for (key, values) in &ds.series {
        if let Series::Interchange(to) = &key.series {
            for (_, &v) in values.range(window.range()) {
                if v > 0.0 {
                    bump(&key.region, to, v);
                } else if v < 0.0 {
                    bump(to, &key.region, -v);
                }
            }
        }
    }
    out
}
