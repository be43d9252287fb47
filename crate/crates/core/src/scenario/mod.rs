//! Probability-weighted scenario sets from hourly history by k-means clustering.

mod kmeans;

pub use kmeans::{
    distinct_rows, elbow_from_profile, kmeans, select_k_elbow, sq_dist, wcss, wcss_profile,
    Clustering, KMeansOptions,
};

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FuelCategory, PlanningInstance, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("need {k} distinct rows, found {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },
}

/// Column name for a region's demand.
pub fn demand_column(region: &str) -> String {
    format!("demand:{region}")
}

/// Column name for the availability of a Variable fuel in a region.
pub fn vrrg_column(region: &str, fuel: &str) -> String {
    format!("vrrg:{region}:{fuel}")
}

/// Hourly observations, one row per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    pub columns: Vec<String>,
    pub timestamps: Vec<DateTime<Utc>>,
    pub rows: Vec<Vec<f64>>,
}

impl ObservationMatrix {
    pub fn new(
        columns: Vec<String>,
        timestamps: Vec<DateTime<Utc>>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, ScenarioError> {
        if timestamps.len() != rows.len() {
            return Err(ScenarioError::Input(format!(
                "{} timestamps for {} rows",
                timestamps.len(),
                rows.len()
            )));
        }
        for (t, row) in timestamps.iter().zip(&rows) {
            if row.len() != columns.len() {
                return Err(ScenarioError::Input(format!(
                    "row at {t} has {} values, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(ScenarioError::Input(format!(
                    "row at {t} has invalid value {v}"
                )));
            }
        }
        let mut seen = columns.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != columns.len() {
            return Err(ScenarioError::Input("duplicate column names".into()));
        }
        Ok(Self {
            columns,
            timestamps,
            rows,
        })
    }

    /// Columns an instance needs: demand per region, then availability per Variable generator.
    pub fn schema_for(inst: &PlanningInstance) -> Vec<String> {
        let mut cols: Vec<String> = inst.regions.iter().map(|r| demand_column(r)).collect();
        for g in &inst.generators {
            if inst.generator_category(g) == Some(FuelCategory::Variable) {
                cols.push(vrrg_column(&g.region, &g.fuel));
            }
        }
        cols
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn month(&self, i: usize) -> u32 {
        self.timestamps[i].month()
    }

    pub fn hour(&self, i: usize) -> u32 {
        self.timestamps[i].hour()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Month,
    MonthHour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub month: u32,
    pub hour: Option<u32>,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hour {
            None => write!(f, "m{:02}", self.month),
            Some(h) => write!(f, "m{:02}h{:02}", self.month, h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    Fixed(usize),
    Elbow(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub grouping: Grouping,
    pub k_policy: KPolicy,
    pub kmeans: KMeansOptions,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            grouping: Grouping::Month,
            k_policy: KPolicy::Fixed(4),
            kmeans: KMeansOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub group: GroupKey,
    pub k: usize,
    pub rows: usize,
    /// Scenarios in descending probability.
    pub scenarios: Vec<Scenario>,
    /// Raw-unit centroids in column order, aligned with `scenarios`.
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares in raw units.
    pub wcss: f64,
    /// The objective actually minimized, on standardized columns.
    pub standardized_wcss: f64,
    /// wcss(1..=k_max) on standardized columns when k came from the elbow rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elbow_profile: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedGroup {
    pub group: GroupKey,
    pub rows: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioBuild {
    pub sets: BTreeMap<GroupKey, ScenarioSet>,
    pub skipped: Vec<SkippedGroup>,
}

/// Z-score each column; constant columns are only centred.
fn standardize(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let dim = rows[0].len();
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in sd.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let sd: Vec<f64> = sd
        .iter()
        .map(|s| if *s > 1e-24 { s.sqrt() } else { 1.0 })
        .collect();
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect()
}

fn scenario_from_centroid(
    columns: &[String],
    centroid: &[f64],
    id: String,
    probability: f64,
) -> Scenario {
    let mut demand = BTreeMap::new();
    let mut vrrg: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (name, &v) in columns.iter().zip(centroid) {
        let parts: Vec<&str> = name.split(':').collect();
        match parts.as_slice() {
            ["demand", region] => {
                demand.insert(region.to_string(), v);
            }
            ["vrrg", region, fuel] => {
                vrrg.entry(region.to_string())
                    .or_default()
                    .insert(fuel.to_string(), v);
            }
            _ => {}
        }
    }
    Scenario {
        id,
        probability,
        demand,
        vrrg_available: vrrg,
    }
}

fn group_key(m: &ObservationMatrix, i: usize, grouping: Grouping) -> GroupKey {
    GroupKey {
        month: m.month(i),
        hour: match grouping {
            Grouping::Month => None,
            Grouping::MonthHour => Some(m.hour(i)),
        },
    }
}

fn cluster_group(
    m: &ObservationMatrix,
    group: GroupKey,
    idx: &[usize],
    opts: &BuildOptions,
) -> Result<ScenarioSet, SkippedGroup> {
    let skip = |reason: String| SkippedGroup {
        group,
        rows: idx.len(),
        reason,
    };
    let raw: Vec<Vec<f64>> = idx.iter().map(|&i| m.rows[i].clone()).collect();
    let distinct = distinct_rows(&raw);
    let (k, profile) = match opts.k_policy {
        KPolicy::Fixed(k) => {
            if distinct < k {
                return Err(skip(format!(
                    "{} rows ({distinct} distinct) for k = {k}",
                    idx.len()
                )));
            }
            (k, None)
        }
        KPolicy::Elbow(k_max) => {
            let z = standardize(&raw);
            let profile = if distinct_rows(&z) <= 1 {
                vec![0.0]
            } else if distinct < k_max {
                return Err(skip(format!(
                    "{} rows ({distinct} distinct) for k_max = {k_max}",
                    idx.len()
                )));
            } else {
                wcss_profile(&z, k_max, &opts.kmeans).map_err(|e| skip(e.to_string()))?
            };
            (elbow_from_profile(&profile), Some(profile))
        }
    };
    let z = standardize(&raw);
    let clustering = kmeans(&z, k, &opts.kmeans).map_err(|e| skip(e.to_string()))?;

    let dim = m.columns.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (r, &c) in raw.iter().zip(&clustering.assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(r) {
            *s += v;
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect();
    let raw_wcss = wcss(&raw, &centroids, &clustering.assignment);

    // descending weight, ties by centroid order
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        counts[b].cmp(&counts[a]).then_with(|| {
            centroids[a]
                .iter()
                .zip(&centroids[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let n = idx.len() as f64;
    let scenarios = order
        .iter()
        .enumerate()
        .map(|(pos, &c)| {
            scenario_from_centroid(
                &m.columns,
                &centroids[c],
                format!("s{}", pos + 1),
                counts[c] as f64 / n,
            )
        })
        .collect();
    Ok(ScenarioSet {
        group,
        k,
        rows: idx.len(),
        scenarios,
        centroids: order.iter().map(|&c| centroids[c].clone()).collect(),
        wcss: raw_wcss,
        standardized_wcss: clustering.wcss,
        elbow_profile: profile,
    })
}

/// Cluster every group of the history into a scenario set.
///
/// Demand and availability are clustered jointly so each scenario keeps the
/// conditions of the hours behind it. Groups that cannot support the requested
/// k are reported in `skipped` rather than failing the whole build.
pub fn build_scenarios(
    history: &ObservationMatrix,
    opts: &BuildOptions,
) -> Result<ScenarioBuild, ScenarioError> {
    match opts.k_policy {
        KPolicy::Fixed(0) => return Err(ScenarioError::Input("k must be at least 1".into())),
        KPolicy::Elbow(k) if k < 3 => {
            return Err(ScenarioError::Input(format!(
                "k_max must be at least 3, got {k}"
            )))
        }
        _ => {}
    }
    if history.columns.is_empty() {
        return Err(ScenarioError::Input(
            "observation matrix has no columns".into(),
        ));
    }
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for i in 0..history.len() {
        groups
            .entry(group_key(history, i, opts.grouping))
            .or_default()
            .push(i);
    }
    let groups: Vec<(GroupKey, Vec<usize>)> = groups.into_iter().collect();

    #[cfg(feature = "parallel")]
    let results: Vec<Result<ScenarioSet, SkippedGroup>> = {
        use rayon::prelude::*;
        groups
            .par_iter()
            .map(|(g, idx)| cluster_group(history, *g, idx, opts))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<ScenarioSet, SkippedGroup>> = groups
        .iter()
        .map(|(g, idx)| cluster_group(history, *g, idx, opts))
        .collect();

    let mut build = ScenarioBuild::default();
    for r in results {
        match r {
            Ok(set) => {
                build.sets.insert(set.group, set);
            }
            Err(skip) => build.skipped.push(skip),
        }
    }
    Ok(build)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn hours(n: usize, month: u32) -> Vec<DateTime<Utc>> {
        (0..n)
            .map(|h| {
                Utc.with_ymd_and_hms(2021, month, 1, h as u32, 0, 0)
                    .unwrap()
            })
            .collect()
    }

    fn two_region(rows: Vec<Vec<f64>>) -> ObservationMatrix {
        let n = rows.len();
        ObservationMatrix::new(
            vec![demand_column("A"), demand_column("B")],
            hours(n, 7),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn identical_rows_give_one_certain_scenario() {
        let m = two_region(vec![vec![5.0, 6.0]; 4]);
        let opts = BuildOptions {
            k_policy: KPolicy::Fixed(1),
            ..Default::default()
        };
        let b = build_scenarios(&m, &opts).unwrap();
        let set = &b.sets[&GroupKey {
            month: 7,
            hour: None,
        }];
        assert_eq!(set.scenarios.len(), 1);
        assert_eq!(set.scenarios[0].probability, 1.0);
        assert_eq!(set.scenarios[0].demand["A"], 5.0);
        assert_eq!(set.scenarios[0].demand["B"], 6.0);
    }

    #[test]
    fn counted_weights() {
        let m = two_region(vec![
            vec![40.0, 30.0],
            vec![40.0, 50.0],
            vec![40.0, 30.0],
            vec![40.0, 30.0],
        ]);
        let opts = BuildOptions {
            k_policy: KPolicy::Fixed(2),
            ..Default::default()
        };
        let b = build_scenarios(&m, &opts).unwrap();
        let set = b.sets.values().next().unwrap();
        assert_eq!(set.scenarios[0].probability, 0.75);
        assert_eq!(set.scenarios[0].demand["B"], 30.0);
        assert_eq!(set.scenarios[1].probability, 0.25);
        assert_eq!(set.scenarios[1].demand["B"], 50.0);
        assert_eq!(set.scenarios[1].demand["A"], 40.0);
    }

    #[test]
    fn short_groups_are_skipped() {
        let m = two_region(vec![vec![1.0, 1.0], vec![2.0, 2.0]]);
        let opts = BuildOptions {
            k_policy: KPolicy::Fixed(4),
            ..Default::default()
        };
        let b = build_scenarios(&m, &opts).unwrap();
        assert!(b.sets.is_empty());
        assert_eq!(b.skipped.len(), 1);
        assert_eq!(b.skipped[0].group.to_string(), "m07");
    }

    #[test]
    fn month_hour_grouping_splits_by_hour() {
        let mut ts = hours(3, 1);
        ts.extend(hours(3, 1));
        let m = ObservationMatrix::new(
            vec![demand_column("A")],
            ts,
            vec![
                vec![1.0],
                vec![2.0],
                vec![3.0],
                vec![4.0],
                vec![5.0],
                vec![6.0],
            ],
        )
        .unwrap();
        let opts = BuildOptions {
            grouping: Grouping::MonthHour,
            k_policy: KPolicy::Fixed(1),
            ..Default::default()
        };
        let b = build_scenarios(&m, &opts).unwrap();
        let keys: Vec<String> = b.sets.keys().map(|k| k.to_string()).collect();
        assert_eq!(keys, vec!["m01h00", "m01h01", "m01h02"]);
        assert_eq!(
            b.sets.values().next().unwrap().scenarios[0].demand["A"],
            2.5
        );
    }

    #[test]
    fn vrrg_columns_land_in_availability() {
        let m = ObservationMatrix::new(
            vec![demand_column("A"), vrrg_column("A", "solar")],
            hours(2, 3),
            vec![vec![10.0, 4.0], vec![10.0, 4.0]],
        )
        .unwrap();
        let opts = BuildOptions {
            k_policy: KPolicy::Fixed(1),
            ..Default::default()
        };
        let b = build_scenarios(&m, &opts).unwrap();
        let s = &b.sets.values().next().unwrap().scenarios[0];
        assert_eq!(s.vrrg("A", "solar"), Some(4.0));
    }

    #[test]
    fn negative_values_are_rejected() {
        let err = ObservationMatrix::new(vec![demand_column("A")], hours(1, 1), vec![vec![-1.0]]);
        assert!(err.is_err());
    }
}
