use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::CostBreakdown;
use crate::scenario::GroupKey;

pub const COST_CATEGORIES: [&str; 6] = [
    "generation",
    "transfer",
    "shortage",
    "deviation_penalty",
    "excess",
    "total",
];

fn category(b: &CostBreakdown, name: &str) -> f64 {
    match name {
        "generation" => b.generation,
        "transfer" => b.transfer,
        "shortage" => b.shortage,
        "deviation_penalty" => b.deviation_penalty,
        "excess" => b.excess,
        "total" => b.total,
        _ => unreachable!("unknown category {name}"),
    }
}

fn add_scaled(acc: &mut CostBreakdown, b: &CostBreakdown, factor: f64) {
    acc.generation += b.generation * factor;
    acc.transfer += b.transfer * factor;
    acc.shortage += b.shortage * factor;
    acc.deviation_penalty += b.deviation_penalty * factor;
    acc.excess += b.excess * factor;
    acc.total += b.total * factor;
}

/// Hours a slice stands for in `year`: every hour of the month, or one hour per day.
pub fn hours_in_slice(key: &GroupKey, year: i32) -> f64 {
    let first = NaiveDate::from_ymd_opt(year, key.month, 1).expect("valid month");
    let next = if key.month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, key.month + 1, 1)
    }
    .expect("valid month");
    let days = (next - first).num_days() as f64;
    match key.hour {
        None => days * 24.0,
        Some(_) => days,
    }
}

/// One solved slice: expected per-step costs plus the hours the slice represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceOutcome {
    pub slice: String,
    /// Calendar position when the slice is a month or month-hour group.
    pub month: Option<u32>,
    pub hour: Option<u32>,
    pub hours: f64,
    pub breakdown: CostBreakdown,
    pub regional: BTreeMap<String, CostBreakdown>,
}

impl SliceOutcome {
    /// A calendar group scaled to the hours it covers in `year`.
    pub fn for_group(
        key: &GroupKey,
        year: i32,
        breakdown: CostBreakdown,
        regional: BTreeMap<String, CostBreakdown>,
    ) -> Self {
        Self {
            slice: key.to_string(),
            month: Some(key.month),
            hour: key.hour,
            hours: hours_in_slice(key, year),
            breakdown,
            regional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    /// Month (1-12) or hour of day (0-23).
    pub key: u32,
    pub totals: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub region: String,
    pub totals: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub scaling: String,
    pub slices: usize,
    /// Statistics of the per-step expected cost across slices.
    pub stats: Vec<CategoryStats>,
    pub monthly: Vec<TimeRow>,
    /// Empty unless slices carry an hour of day.
    pub hourly: Vec<TimeRow>,
    pub regional: Vec<RegionRow>,
    /// Per-step expected cost of each slice, in input order.
    pub per_slice: Vec<SliceRow>,
    pub annual: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub slice: String,
    pub hours: f64,
    pub per_step: CostBreakdown,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn aggregate_report(slices: &[SliceOutcome]) -> Result<AggregateReport, AnalysisError> {
    if slices.is_empty() {
        return Err(AnalysisError::Input("no slices to aggregate".into()));
    }
    let stats = COST_CATEGORIES
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = slices.iter().map(|s| category(&s.breakdown, c)).collect();
            v.sort_by(f64::total_cmp);
            CategoryStats {
                category: c.to_string(),
                min: v[0],
                max: v[v.len() - 1],
                mean: v.iter().sum::<f64>() / v.len() as f64,
                median: median(&v),
            }
        })
        .collect();

    let mut monthly: BTreeMap<u32, CostBreakdown> = BTreeMap::new();
    let mut hourly: BTreeMap<u32, CostBreakdown> = BTreeMap::new();
    let mut regional: BTreeMap<String, CostBreakdown> = BTreeMap::new();
    let mut annual = CostBreakdown::default();
    for s in slices {
        if let Some(m) = s.month {
            add_scaled(monthly.entry(m).or_default(), &s.breakdown, s.hours);
        }
        if let Some(h) = s.hour {
            add_scaled(hourly.entry(h).or_default(), &s.breakdown, s.hours);
        }
        for (r, b) in &s.regional {
            add_scaled(regional.entry(r.clone()).or_default(), b, s.hours);
        }
        add_scaled(&mut annual, &s.breakdown, s.hours);
    }
    Ok(AggregateReport {
        scaling: "totals = per-step expected cost of each slice x hours the slice represents"
            .into(),
        slices: slices.len(),
        stats,
        monthly: monthly
            .into_iter()
            .map(|(key, totals)| TimeRow { key, totals })
            .collect(),
        hourly: hourly
            .into_iter()
            .map(|(key, totals)| TimeRow { key, totals })
            .collect(),
        regional: regional
            .into_iter()
            .map(|(region, totals)| RegionRow { region, totals })
            .collect(),
        per_slice: slices
            .iter()
            .map(|s| SliceRow {
                slice: s.slice.clone(),
                hours: s.hours,
                per_step: s.breakdown,
            })
            .collect(),
        annual,
    })
}

fn csv_text(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn breakdown_cells(b: &CostBreakdown) -> Vec<String> {
    COST_CATEGORIES
        .iter()
        .map(|c| category(b, c).to_string())
        .collect()
}

fn with_categories(first: &str) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(COST_CATEGORIES.iter().map(|c| c.to_string()))
        .collect()
}

impl AggregateReport {
    pub fn stats_csv(&self) -> String {
        csv_text(
            ["category", "min", "max", "mean", "median"]
                .map(String::from)
                .to_vec(),
            self.stats
                .iter()
                .map(|s| {
                    vec![
                        s.category.clone(),
                        s.min.to_string(),
                        s.max.to_string(),
                        s.mean.to_string(),
                        s.median.to_string(),
                    ]
                })
                .collect(),
        )
    }

    fn time_csv(rows: &[TimeRow], key: &str) -> String {
        csv_text(
            with_categories(key),
            rows.iter()
                .map(|r| {
                    let mut cells = vec![r.key.to_string()];
                    cells.extend(breakdown_cells(&r.totals));
                    cells
                })
                .collect(),
        )
    }

    pub fn monthly_csv(&self) -> String {
        Self::time_csv(&self.monthly, "month")
    }

    pub fn hourly_csv(&self) -> String {
        Self::time_csv(&self.hourly, "hour")
    }

    pub fn regional_csv(&self) -> String {
        csv_text(
            with_categories("region"),
            self.regional
                .iter()
                .map(|r| {
                    let mut cells = vec![r.region.clone()];
                    cells.extend(breakdown_cells(&r.totals));
                    cells
                })
                .collect(),
        )
    }

    pub fn slices_csv(&self) -> String {
        let mut header = with_categories("slice");
        header.insert(1, "hours".into());
        csv_text(
            header,
            self.per_slice
                .iter()
                .map(|r| {
                    let mut cells = vec![r.slice.clone(), r.hours.to_string()];
                    cells.extend(breakdown_cells(&r.per_step));
                    cells
                })
                .collect(),
        )
    }

    /// Months ordered by descending total cost.
    pub fn months_by_total(&self) -> Vec<u32> {
        let mut rows: Vec<&TimeRow> = self.monthly.iter().collect();
        rows.sort_by(|a, b| {
            b.totals
                .total
                .total_cmp(&a.totals.total)
                .then(a.key.cmp(&b.key))
        });
        rows.iter().map(|r| r.key).collect()
    }
}
