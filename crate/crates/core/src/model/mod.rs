//! Planning-instance data model and its compilation to a linear program.
//!
//! One planning step is one hour: power quantities are MWh per step and
//! costs are $/MWh.

mod extensive;
pub(crate) mod solution;
mod validate;

pub use extensive::{build_extensive_form, ModelLayout, ScenarioVars, SecondStage};
pub use solution::{
    cost_breakdown, extract_solution, regional_breakdown, solve_extensive, CostBreakdown, LinkFlow,
    PlanningSolution, ScenarioOutcome,
};
pub use validate::{validate_instance, ValidationReport, Violation};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpError, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuelCategory {
    /// Inflexible output, e.g. nuclear: production pinned to `available_power`.
    Fixed,
    /// Output bounded by a controllable resource, e.g. gas or petroleum.
    Dispatchable,
    /// Weather-dependent output whose availability varies per scenario.
    Variable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fuel {
    pub id: String,
    pub category: FuelCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub region: String,
    pub fuel: String,
    /// Optional in documents; when present it must agree with the fuel's category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<FuelCategory>,
    pub rated_power: f64,
    pub available_power: f64,
    pub production_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionLink {
    pub from: String,
    pub to: String,
    pub capacity: f64,
    pub transfer_cost: f64,
    pub deviation_penalty: f64,
}

impl TransmissionLink {
    pub fn with_kappa(from: &str, to: &str, capacity: f64, transfer_cost: f64, kappa: f64) -> Self {
        Self {
            from: from.to_string(),
            to: to.to_string(),
            capacity,
            transfer_cost,
            deviation_penalty: kappa * transfer_cost,
        }
    }

    pub fn key(&self) -> String {
        link_key(&self.from, &self.to)
    }
}

pub fn link_key(from: &str, to: &str) -> String {
    format!("{from}>{to}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub probability: f64,
    pub demand: BTreeMap<String, f64>,
    /// region -> Variable fuel -> available MWh.
    #[serde(default)]
    pub vrrg_available: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Scenario {
    pub fn vrrg(&self, region: &str, fuel: &str) -> Option<f64> {
        self.vrrg_available
            .get(region)
            .and_then(|m| m.get(fuel))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "InstanceDoc", try_from = "InstanceDoc")]
pub struct PlanningInstance {
    pub regions: Vec<String>,
    pub fuels: Vec<Fuel>,
    pub generators: Vec<GeneratorSpec>,
    pub links: Vec<TransmissionLink>,
    pub scenarios: Vec<Scenario>,
    pub shortage_cost: BTreeMap<String, f64>,
    /// When set, every link's deviation penalty is `kappa_trans * transfer_cost`.
    pub kappa_trans: Option<f64>,
    /// Penalty on surplus energy; zero reproduces the costless excess of the base model.
    pub excess_cost: f64,
}

impl PlanningInstance {
    pub fn fuel_category(&self, fuel: &str) -> Option<FuelCategory> {
        self.fuels.iter().find(|f| f.id == fuel).map(|f| f.category)
    }

    pub fn generator_category(&self, g: &GeneratorSpec) -> Option<FuelCategory> {
        self.fuel_category(&g.fuel)
    }

    /// Copy of the instance with a different scenario list.
    pub fn with_scenarios(&self, scenarios: Vec<Scenario>) -> Self {
        Self {
            scenarios,
            ..self.clone()
        }
    }

    pub fn first_stage_cost(&self, plan: &[f64]) -> f64 {
        self.links
            .iter()
            .zip(plan)
            .map(|(l, p)| l.transfer_cost * p)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("instance failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP solve ended with status {0:?}")]
    NotOptimal(LpStatus),
    #[error("solution does not match the model: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    from: String,
    to: String,
    capacity: f64,
    transfer_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deviation_penalty: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    regions: Vec<String>,
    fuels: Vec<Fuel>,
    generators: Vec<GeneratorSpec>,
    #[serde(default)]
    links: Vec<LinkDoc>,
    scenarios: Vec<Scenario>,
    shortage_cost: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa_trans: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    excess_cost: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl From<PlanningInstance> for InstanceDoc {
    fn from(inst: PlanningInstance) -> Self {
        let derived = inst.kappa_trans.is_some();
        Self {
            regions: inst.regions,
            fuels: inst.fuels,
            generators: inst.generators,
            links: inst
                .links
                .into_iter()
                .map(|l| LinkDoc {
                    from: l.from,
                    to: l.to,
                    capacity: l.capacity,
                    transfer_cost: l.transfer_cost,
                    deviation_penalty: (!derived).then_some(l.deviation_penalty),
                })
                .collect(),
            scenarios: inst.scenarios,
            shortage_cost: inst.shortage_cost,
            kappa_trans: inst.kappa_trans,
            excess_cost: inst.excess_cost,
        }
    }
}

impl TryFrom<InstanceDoc> for PlanningInstance {
    type Error = String;

    fn try_from(doc: InstanceDoc) -> Result<Self, String> {
        let links = doc
            .links
            .into_iter()
            .map(|l| {
                let penalty = match (doc.kappa_trans, l.deviation_penalty) {
                    (Some(k), None) => k * l.transfer_cost,
                    (Some(k), Some(p)) if p == k * l.transfer_cost => p,
                    (Some(_), Some(_)) => {
                        return Err(format!(
                            "link {}>{}: deviation_penalty conflicts with kappa_trans",
                            l.from, l.to
                        ))
                    }
                    (None, Some(p)) => p,
                    (None, None) => {
                        return Err(format!(
                            "link {}>{}: deviation_penalty required when kappa_trans is absent",
                            l.from, l.to
                        ))
                    }
                };
                Ok(TransmissionLink {
                    from: l.from,
                    to: l.to,
                    capacity: l.capacity,
                    transfer_cost: l.transfer_cost,
                    deviation_penalty: penalty,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            regions: doc.regions,
            fuels: doc.fuels,
            generators: doc.generators,
            links,
            scenarios: doc.scenarios,
            shortage_cost: doc.shortage_cost,
            kappa_trans: doc.kappa_trans,
            excess_cost: doc.excess_cost,
        })
    }
}
