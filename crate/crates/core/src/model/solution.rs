use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lp::{self, LinearProgram, LpSolution, SolverOptions};

use super::{build_extensive_form, ModelError, PlanningInstance, ScenarioVars};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkFlow {
    pub from: String,
    pub to: String,
    pub value: f64,
}

/// Second-stage decisions for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: String,
    /// region -> fuel -> MWh
    pub production: BTreeMap<String, BTreeMap<String, f64>>,
    pub actual_interchange: Vec<LinkFlow>,
    pub deviation: Vec<LinkFlow>,
    pub shortage: BTreeMap<String, f64>,
    pub excess: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningSolution {
    pub planned_interchange: Vec<LinkFlow>,
    pub scenarios: Vec<ScenarioOutcome>,
    pub objective_value: f64,
}

impl PlanningSolution {
    pub fn plan(&self, from: &str, to: &str) -> Option<f64> {
        self.planned_interchange
            .iter()
            .find(|f| f.from == from && f.to == to)
            .map(|f| f.value)
    }

    pub fn plan_vector(&self) -> Vec<f64> {
        self.planned_interchange.iter().map(|f| f.value).collect()
    }

    pub fn scenario(&self, id: &str) -> Option<&ScenarioOutcome> {
        self.scenarios.iter().find(|s| s.scenario == id)
    }
}

/// Solver noise below this magnitude is reported as exact zero.
const ZERO_SNAP: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    if v.abs() < ZERO_SNAP {
        0.0
    } else {
        v
    }
}

pub(crate) fn link_flows(inst: &PlanningInstance, cols: &[usize], x: &[f64]) -> Vec<LinkFlow> {
    inst.links
        .iter()
        .zip(cols)
        .map(|(l, &c)| LinkFlow {
            from: l.from.clone(),
            to: l.to.clone(),
            value: snap(x[c]),
        })
        .collect()
}

impl ScenarioOutcome {
    pub(crate) fn decode(
        inst: &PlanningInstance,
        id: &str,
        vars: &ScenarioVars,
        x: &[f64],
    ) -> Self {
        let mut production: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (g, &c) in inst.generators.iter().zip(&vars.prod) {
            production
                .entry(g.region.clone())
                .or_default()
                .insert(g.fuel.clone(), snap(x[c]));
        }
        let per_region = |cols: &[usize]| {
            inst.regions
                .iter()
                .zip(cols)
                .map(|(r, &c)| (r.clone(), snap(x[c])))
                .collect::<BTreeMap<_, _>>()
        };
        Self {
            scenario: id.to_string(),
            production,
            actual_interchange: link_flows(inst, &vars.actual, x),
            deviation: link_flows(inst, &vars.dev, x),
            shortage: per_region(&vars.short),
            excess: per_region(&vars.excess),
        }
    }
}

/// Decode an optimal LP solution of the extensive form back into model terms.
pub fn extract_solution(
    inst: &PlanningInstance,
    lp: &LinearProgram,
    solution: &LpSolution,
) -> Result<PlanningSolution, ModelError> {
    if !solution.is_optimal() {
        return Err(ModelError::NotOptimal(solution.status));
    }
    let (expected, layout) = build_extensive_form(inst)?;
    if expected.var_names != lp.var_names {
        return Err(ModelError::Mismatch(
            "LP variable names differ from the instance's extensive form".into(),
        ));
    }
    if solution.primal.len() != lp.num_vars() {
        return Err(ModelError::Mismatch(format!(
            "primal has {} entries, LP has {} variables",
            solution.primal.len(),
            lp.num_vars()
        )));
    }
    let x = &solution.primal;
    Ok(PlanningSolution {
        planned_interchange: link_flows(inst, &layout.plan, x),
        scenarios: inst
            .scenarios
            .iter()
            .zip(&layout.scenarios)
            .map(|(s, vars)| ScenarioOutcome::decode(inst, &s.id, vars, x))
            .collect(),
        objective_value: solution.objective,
    })
}

/// Build, solve and decode the extensive form.
pub fn solve_extensive(
    inst: &PlanningInstance,
    opts: &SolverOptions,
) -> Result<(PlanningSolution, LpSolution), ModelError> {
    let (lp, _) = build_extensive_form(inst)?;
    let sol = lp::solve(&lp, opts)?;
    let planning = extract_solution(inst, &lp, &sol)?;
    Ok((planning, sol))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub generation: f64,
    pub transfer: f64,
    pub shortage: f64,
    pub deviation_penalty: f64,
    /// Zero unless the instance sets `excess_cost`.
    pub excess: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn close(mut self) -> Self {
        self.total =
            self.generation + self.transfer + self.shortage + self.deviation_penalty + self.excess;
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            generation: self.generation * factor,
            transfer: self.transfer * factor,
            shortage: self.shortage * factor,
            deviation_penalty: self.deviation_penalty * factor,
            excess: self.excess * factor,
            total: self.total * factor,
        }
    }
}

/// Expected cost per category. Transfer cost is first-stage and unweighted.
pub fn cost_breakdown(inst: &PlanningInstance, sol: &PlanningSolution) -> CostBreakdown {
    let regional = regional_breakdown(inst, sol);
    let mut total = CostBreakdown::default();
    for b in regional.values() {
        total.generation += b.generation;
        total.transfer += b.transfer;
        total.shortage += b.shortage;
        total.deviation_penalty += b.deviation_penalty;
        total.excess += b.excess;
    }
    total.close()
}

/// Cost categories attributed per region; link costs go to the sending region.
pub fn regional_breakdown(
    inst: &PlanningInstance,
    sol: &PlanningSolution,
) -> BTreeMap<String, CostBreakdown> {
    let mut out: BTreeMap<String, CostBreakdown> = inst
        .regions
        .iter()
        .map(|r| (r.clone(), CostBreakdown::default()))
        .collect();
    for (l, f) in inst.links.iter().zip(&sol.planned_interchange) {
        out.get_mut(&l.from).expect("known region").transfer += l.transfer_cost * f.value;
    }
    for (s, outcome) in inst.scenarios.iter().zip(&sol.scenarios) {
        let rho = s.probability;
        for g in &inst.generators {
            let p = outcome.production[&g.region][&g.fuel];
            out.get_mut(&g.region).expect("known region").generation += rho * g.production_cost * p;
        }
        for (l, d) in inst.links.iter().zip(&outcome.deviation) {
            out.get_mut(&l.from)
                .expect("known region")
                .deviation_penalty += rho * l.deviation_penalty * d.value;
        }
        for r in &inst.regions {
            let b = out.get_mut(r).expect("known region");
            b.shortage += rho * inst.shortage_cost[r] * outcome.shortage[r];
            b.excess += rho * inst.excess_cost * outcome.excess[r];
        }
    }
    out.into_iter().map(|(k, v)| (k, v.close())).collect()
}
