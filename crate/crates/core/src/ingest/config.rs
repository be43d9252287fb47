use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::FuelCategory;

/// Published non-residential outage cost of $10.37/kWh unserved, in $/MWh.
pub const WOO2021_SHORTAGE_COST: f64 = 10370.0;

/// Which CSV headers carry each field of a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub timestamp: String,
    pub region: String,
    pub series: String,
    pub value: String,
    /// Optional column holding the fuel or counterpart region, appended to the series as `series:detail`.
    pub detail: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            region: "region".into(),
            series: "series".into(),
            value: "value".into(),
            detail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShortageCost {
    Uniform(f64),
    PerRegion(BTreeMap<String, f64>),
    /// A named published estimate; only `"woo2021"` is known.
    Named(String),
}

impl ShortageCost {
    pub fn for_region(&self, region: &str) -> Result<Option<f64>, IngestError> {
        match self {
            ShortageCost::Uniform(v) => Ok(Some(*v)),
            ShortageCost::PerRegion(m) => Ok(m.get(region).copied()),
            ShortageCost::Named(n) if n == "woo2021" => Ok(Some(WOO2021_SHORTAGE_COST)),
            ShortageCost::Named(n) => Err(IngestError::Config(format!(
                "unknown shortage_cost preset {n:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TransmissionCost {
    Uniform(f64),
    /// Keyed by `from>to`.
    PerLink(BTreeMap<String, f64>),
}

impl TransmissionCost {
    pub fn for_link(&self, key: &str) -> Option<f64> {
        match self {
            TransmissionCost::Uniform(v) => Some(*v),
            TransmissionCost::PerLink(m) => m.get(key).copied(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedOutput {
    /// Mean hourly output over the estimation window.
    #[default]
    Mean,
    Max,
}

/// Costs, fuel categories and CSV layout for assembling instances from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    /// $/MWh per fuel.
    pub production_cost: BTreeMap<String, f64>,
    pub shortage_cost: ShortageCost,
    pub transmission_cost: TransmissionCost,
    pub kappa_trans: f64,
    pub fuel_categories: BTreeMap<String, FuelCategory>,
    #[serde(default)]
    pub column_map: ColumnMap,
    #[serde(default)]
    pub fixed_output: FixedOutput,
    #[serde(default)]
    pub excess_cost: f64,
}

impl CostConfig {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        serde_json::from_str(text).map_err(|e| IngestError::Config(e.to_string()))
    }
}
