use serde::{Deserialize, Serialize};

use super::{solve_instance, AnalysisError, SolveMethod};
use crate::benders::BendersOptions;
use crate::model::{CostBreakdown, FuelCategory, PlanningInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityOptions {
    /// MWh per step added to one region at a time.
    pub delta: f64,
    /// Dispatchable fuel to expand; the cheapest one in the region when unset.
    pub fuel: Option<String>,
    pub method: SolveMethod,
}

impl Default for SensitivityOptions {
    fn default() -> Self {
        Self {
            delta: 1000.0,
            fuel: None,
            method: SolveMethod::Benders,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub region: String,
    /// Fuel that received the extra capacity; `None` when no Dispatchable fuel qualifies.
    pub fuel: Option<String>,
    pub baseline_cost: f64,
    pub expanded_cost: Option<f64>,
    pub saving: Option<f64>,
}

impl SensitivityEntry {
    pub fn applicable(&self) -> bool {
        self.fuel.is_some()
    }
}

fn expansion_target(inst: &PlanningInstance, region: &str, fuel: Option<&str>) -> Option<usize> {
    inst.generators
        .iter()
        .enumerate()
        .filter(|(_, g)| {
            g.region == region && inst.generator_category(g) == Some(FuelCategory::Dispatchable)
        })
        .filter(|(_, g)| fuel.is_none_or(|f| g.fuel == f))
        .min_by(|(_, a), (_, b)| {
            a.production_cost
                .total_cmp(&b.production_cost)
                .then(a.fuel.cmp(&b.fuel))
        })
        .map(|(i, _)| i)
}

/// Re-solve with `delta` more Dispatchable capacity in each region in turn.
pub fn capacity_sensitivity(
    inst: &PlanningInstance,
    opts: &SensitivityOptions,
    bopts: &BendersOptions,
) -> Result<Vec<SensitivityEntry>, AnalysisError> {
    if !(opts.delta > 0.0 && opts.delta.is_finite()) {
        return Err(AnalysisError::Input(format!(
            "delta must be positive, got {}",
            opts.delta
        )));
    }
    let baseline = solve_instance(inst, opts.method, bopts)?.objective();
    let run = |region: &String| -> Result<SensitivityEntry, AnalysisError> {
        let Some(g) = expansion_target(inst, region, opts.fuel.as_deref()) else {
            return Ok(SensitivityEntry {
                region: region.clone(),
                fuel: None,
                baseline_cost: baseline,
                expanded_cost: None,
                saving: None,
            });
        };
        let mut expanded = inst.clone();
        expanded.generators[g].rated_power += opts.delta;
        expanded.generators[g].available_power += opts.delta;
        let cost = solve_instance(&expanded, opts.method, bopts)?.objective();
        Ok(SensitivityEntry {
            region: region.clone(),
            fuel: Some(inst.generators[g].fuel.clone()),
            baseline_cost: baseline,
            expanded_cost: Some(cost),
            saving: Some(baseline - cost),
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        inst.regions.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        inst.regions.iter().map(run).collect()
    }
}

/// A link capacity no optimal plan needs to exceed: all demand of all
/// scenarios plus all forced Fixed output.
pub fn unlimited_capacity(inst: &PlanningInstance) -> f64 {
    let demand: f64 = inst.scenarios.iter().flat_map(|s| s.demand.values()).sum();
    let fixed: f64 = inst
        .generators
        .iter()
        .filter(|g| inst.generator_category(g) == Some(FuelCategory::Fixed))
        .map(|g| g.available_power)
        .sum();
    demand + fixed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDelta {
    pub from: String,
    pub to: String,
    pub capacity: f64,
    pub baseline_plan: f64,
    pub unlimited_plan: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub unlimited_capacity: f64,
    pub baseline: CostBreakdown,
    pub unlimited: CostBreakdown,
    pub saving: f64,
    pub per_link: Vec<LinkDelta>,
}

/// Compare the instance against a copy whose existing links are effectively uncapped.
pub fn transmission_relaxation(
    inst: &PlanningInstance,
    method: SolveMethod,
    bopts: &BendersOptions,
) -> Result<RelaxationReport, AnalysisError> {
    let bound = unlimited_capacity(inst);
    let mut relaxed = inst.clone();
    for l in &mut relaxed.links {
        l.capacity = l.capacity.max(bound);
    }
    let base = solve_instance(inst, method, bopts)?;
    let free = solve_instance(&relaxed, method, bopts)?;
    let per_link = inst
        .links
        .iter()
        .zip(
            base.solution
                .planned_interchange
                .iter()
                .zip(&free.solution.planned_interchange),
        )
        .map(|(l, (b, u))| LinkDelta {
            from: l.from.clone(),
            to: l.to.clone(),
            capacity: l.capacity,
            baseline_plan: b.value,
            unlimited_plan: u.value,
            delta: u.value - b.value,
        })
        .collect();
    Ok(RelaxationReport {
        unlimited_capacity: bound,
        saving: base.breakdown.total - free.breakdown.total,
        baseline: base.breakdown,
        unlimited: free.breakdown,
        per_link,
    })
}
