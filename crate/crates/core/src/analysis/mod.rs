//! Policy experiments on solved instances: value of information, capacity
//! sensitivity, transmission relaxation and cost aggregation over slices.

mod report;
mod sensitivity;

pub use report::{
    aggregate_report, hours_in_slice, AggregateReport, CategoryStats, RegionRow, SliceOutcome,
    SliceRow, TimeRow, COST_CATEGORIES,
};
pub use sensitivity::{
    capacity_sensitivity, transmission_relaxation, unlimited_capacity, LinkDelta, RelaxationReport,
    SensitivityEntry, SensitivityOptions,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benders::{evaluate_plan, run_benders, BendersError, BendersOptions, BendersReport};
use crate::model::{
    cost_breakdown, solve_extensive, CostBreakdown, LinkFlow, ModelError, PlanningInstance,
    PlanningSolution, Scenario,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Benders(#[from] BendersError),
    #[error("Benders stopped after {iterations} iterations with relative gap {gap:e}")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    #[default]
    Benders,
    Extensive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solved {
    pub solution: PlanningSolution,
    pub breakdown: CostBreakdown,
    /// Present for Benders solves.
    pub benders: Option<BendersReport>,
}

impl Solved {
    pub fn objective(&self) -> f64 {
        self.solution.objective_value
    }
}

/// Solve by either method; a Benders run that hits its iteration limit is an error.
pub fn solve_instance(
    inst: &PlanningInstance,
    method: SolveMethod,
    opts: &BendersOptions,
) -> Result<Solved, AnalysisError> {
    let (solution, benders) = match method {
        SolveMethod::Extensive => (solve_extensive(inst, &opts.lp)?.0, None),
        SolveMethod::Benders => {
            let report = run_benders(inst, opts)?;
            if !report.converged {
                return Err(AnalysisError::NotConverged {
                    iterations: report.iterations.len(),
                    gap: report.gap,
                });
            }
            (report.final_solution.clone(), Some(report))
        }
    };
    Ok(Solved {
        breakdown: cost_breakdown(inst, &solution),
        solution,
        benders,
    })
}

fn certain(inst: &PlanningInstance, scenario: Scenario) -> PlanningInstance {
    inst.with_scenarios(vec![Scenario {
        probability: 1.0,
        ..scenario
    }])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptimum {
    pub scenario: String,
    pub probability: f64,
    pub objective: f64,
    pub plan: Vec<LinkFlow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaitAndSee {
    pub ws: f64,
    pub per_scenario: Vec<ScenarioOptimum>,
}

/// Expected cost when each scenario is known before planning.
pub fn wait_and_see(
    inst: &PlanningInstance,
    opts: &BendersOptions,
) -> Result<WaitAndSee, AnalysisError> {
    let per_scenario = inst
        .scenarios
        .iter()
        .map(|s| {
            let (sol, _) = solve_extensive(&certain(inst, s.clone()), &opts.lp)?;
            Ok(ScenarioOptimum {
                scenario: s.id.clone(),
                probability: s.probability,
                objective: sol.objective_value,
                plan: sol.planned_interchange,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let ws = per_scenario
        .iter()
        .map(|o| o.probability * o.objective)
        .sum();
    Ok(WaitAndSee { ws, per_scenario })
}

/// The scenario whose demand and availability are the probability-weighted means.
pub fn mean_scenario(inst: &PlanningInstance) -> Scenario {
    let mut mean = Scenario {
        id: "mean".into(),
        probability: 1.0,
        demand: inst.regions.iter().map(|r| (r.clone(), 0.0)).collect(),
        vrrg_available: Default::default(),
    };
    for s in &inst.scenarios {
        for (r, d) in &s.demand {
            *mean.demand.entry(r.clone()).or_default() += s.probability * d;
        }
        for (r, fuels) in &s.vrrg_available {
            for (f, v) in fuels {
                *mean
                    .vrrg_available
                    .entry(r.clone())
                    .or_default()
                    .entry(f.clone())
                    .or_default() += s.probability * v;
            }
        }
    }
    mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanValue {
    pub ev: f64,
    pub mean_plan: Vec<LinkFlow>,
}

/// Optimum of the deterministic problem on the mean scenario.
pub fn mean_value_cost(
    inst: &PlanningInstance,
    opts: &BendersOptions,
) -> Result<MeanValue, AnalysisError> {
    let (sol, _) = solve_extensive(&certain(inst, mean_scenario(inst)), &opts.lp)?;
    Ok(MeanValue {
        ev: sol.objective_value,
        mean_plan: sol.planned_interchange,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvpiReport {
    /// Stochastic optimum (the recourse problem).
    pub rp: f64,
    /// Expected cost under perfect information.
    pub ws: f64,
    /// Optimum of the mean-value problem.
    pub ev: f64,
    /// Expected cost of committing to the mean-value plan.
    pub eev: f64,
    /// rp - ws; never negative.
    pub evpi_standard: f64,
    /// ws - ev, the printed form; no sign is guaranteed.
    pub evpi_paper: f64,
    /// eev - rp.
    pub vss: f64,
    pub per_scenario: Vec<ScenarioOptimum>,
    pub mean_plan: Vec<LinkFlow>,
}

pub fn evpi(
    inst: &PlanningInstance,
    method: SolveMethod,
    opts: &BendersOptions,
) -> Result<EvpiReport, AnalysisError> {
    let rp = solve_instance(inst, method, opts)?.objective();
    let ws = wait_and_see(inst, opts)?;
    let mv = mean_value_cost(inst, opts)?;
    let plan: Vec<f64> = mv.mean_plan.iter().map(|f| f.value).collect();
    let (eev, _) = evaluate_plan(inst, &plan, &opts.lp)?;
    Ok(EvpiReport {
        rp,
        ws: ws.ws,
        ev: mv.ev,
        eev,
        evpi_standard: rp - ws.ws,
        evpi_paper: ws.ws - mv.ev,
        vss: eev - rp,
        per_scenario: ws.per_scenario,
        mean_plan: mv.mean_plan,
    })
}
