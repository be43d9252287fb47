//! Scenario-based Benders decomposition (single aggregated cut per iteration).
//!
//! The planned interchange is the complicating variable. Each iteration
//! solves the master over plans and the recourse estimate `alpha`, fixes the
//! proposed plan in every scenario subproblem, and adds one optimality cut
//! built from the probability-weighted subproblem costs and plan duals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, SolverOptions};
use crate::model::{
    solution::link_flows, validate_instance, ModelError, PlanningInstance, PlanningSolution,
    Scenario, ScenarioOutcome, SecondStage,
};

#[derive(Debug, Error)]
pub enum BendersError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("subproblem for scenario {scenario} ended with status {status:?}")]
    Subproblem { scenario: String, status: LpStatus },
    #[error("master problem ended with status {0:?}")]
    Master(LpStatus),
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemResult {
    pub scenario: String,
    /// Unweighted optimal second-stage cost of this scenario.
    pub cost: f64,
    /// d(cost)/d(plan) per link, from the duals of the plan-fixing rows.
    pub duals_plan: Vec<f64>,
    pub second_stage: ScenarioOutcome,
}

/// Affine underestimator `constant + gradient . plan` of the expected recourse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub constant: f64,
    pub gradient: Vec<f64>,
    pub source_iteration: usize,
}

impl Cut {
    pub fn value_at(&self, plan: &[f64]) -> f64 {
        self.constant
            + self
                .gradient
                .iter()
                .zip(plan)
                .map(|(g, p)| g * p)
                .sum::<f64>()
    }
}

/// Solve one scenario's recourse problem with the plan held fixed.
pub fn solve_subproblem(
    inst: &PlanningInstance,
    scenario: &Scenario,
    fixed_plan: &[f64],
    opts: &SolverOptions,
) -> Result<SubproblemResult, BendersError> {
    if fixed_plan.len() != inst.links.len() {
        return Err(BendersError::Mismatch(format!(
            "plan has {} entries for {} links",
            fixed_plan.len(),
            inst.links.len()
        )));
    }
    let sub = SecondStage::build(inst, scenario, fixed_plan);
    let sol = lp::solve(&sub.lp, opts)?;
    if !sol.is_optimal() {
        return Err(BendersError::Subproblem {
            scenario: scenario.id.clone(),
            status: sol.status,
        });
    }
    Ok(SubproblemResult {
        scenario: scenario.id.clone(),
        cost: sol.objective,
        duals_plan: sub.fix_rows.iter().map(|&r| sol.duals[r]).collect(),
        second_stage: ScenarioOutcome::decode(inst, &scenario.id, &sub.vars, &sol.primal),
    })
}

/// Combine per-scenario results into one optimality cut at `generating_plan`.
///
/// `probabilities` pairs scenario ids with weights, in the same order as `results`.
pub fn aggregate_cut(
    results: &[SubproblemResult],
    probabilities: &[(String, f64)],
    generating_plan: &[f64],
    source_iteration: usize,
) -> Result<Cut, BendersError> {
    if results.len() != probabilities.len() {
        return Err(BendersError::Mismatch(format!(
            "{} subproblem results for {} scenarios",
            results.len(),
            probabilities.len()
        )));
    }
    let mut expected = 0.0;
    let mut gradient = vec![0.0; generating_plan.len()];
    // summed in scenario order for reproducibility
    for (res, (id, rho)) in results.iter().zip(probabilities) {
        if &res.scenario != id {
            return Err(BendersError::Mismatch(format!(
                "result for scenario {} where {} was expected",
                res.scenario, id
            )));
        }
        if res.duals_plan.len() != generating_plan.len() {
            return Err(BendersError::Mismatch(
                "dual vector length differs from plan".into(),
            ));
        }
        expected += rho * res.cost;
        for (g, mu) in gradient.iter_mut().zip(&res.duals_plan) {
            *g += rho * mu;
        }
    }
    let shift: f64 = gradient
        .iter()
        .zip(generating_plan)
        .map(|(g, p)| g * p)
        .sum();
    Ok(Cut {
        constant: expected - shift,
        gradient,
        source_iteration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterResult {
    pub plan: Vec<f64>,
    pub alpha: f64,
    pub lower_bound: f64,
}

/// Minimize first-stage transfer cost plus `alpha` over `0 <= plan <= capacity`,
/// with `alpha` above every cut and above `alpha_down`.
pub fn solve_master(
    inst: &PlanningInstance,
    cuts: &[Cut],
    alpha_down: f64,
    opts: &SolverOptions,
) -> Result<MasterResult, BendersError> {
    let mut lp = LinearProgram::new();
    let plan: Vec<usize> = inst
        .links
        .iter()
        .map(|l| {
            lp.add_var(
                format!("plan[{}]", l.key()),
                l.transfer_cost,
                0.0,
                l.capacity,
            )
        })
        .collect();
    let alpha = lp.add_var("alpha", 1.0, alpha_down, f64::INFINITY);
    for (i, cut) in cuts.iter().enumerate() {
        let mut coeffs = vec![(alpha, 1.0)];
        coeffs.extend(
            plan.iter()
                .zip(&cut.gradient)
                .filter(|(_, g)| **g != 0.0)
                .map(|(&p, &g)| (p, -g)),
        );
        lp.add_row(format!("cut[{i}]"), coeffs, Relation::Ge, cut.constant);
    }
    let sol = lp::solve(&lp, opts)?;
    if !sol.is_optimal() {
        return Err(BendersError::Master(sol.status));
    }
    Ok(MasterResult {
        plan: plan.iter().map(|&p| sol.primal[p]).collect(),
        alpha: sol.primal[alpha],
        lower_bound: sol.objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BendersOptions {
    pub max_iterations: usize,
    pub rel_gap: f64,
    /// Initial lower bound on `alpha`. Zero is valid because every recourse cost is nonnegative.
    pub alpha_down: f64,
    #[serde(skip)]
    pub lp: SolverOptions,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            rel_gap: 1e-6,
            alpha_down: 0.0,
            lp: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub plan: Vec<f64>,
    pub master_objective: f64,
    /// Best lower bound so far (running max of master objectives).
    pub lower_bound: f64,
    /// First-stage cost of this iteration's plan plus its expected recourse.
    pub upper_bound: f64,
    pub best_upper_bound: f64,
    pub gap: f64,
    pub cut: Cut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersReport {
    /// Link keys (`from>to`) labelling every plan and gradient vector.
    pub links: Vec<String>,
    pub iterations: Vec<IterationRecord>,
    pub final_solution: PlanningSolution,
    pub objective: f64,
    pub converged: bool,
    pub gap: f64,
}

impl BendersReport {
    pub fn cuts(&self) -> impl Iterator<Item = &Cut> {
        self.iterations.iter().map(|r| &r.cut)
    }
}

pub fn relative_gap(upper: f64, lower: f64) -> f64 {
    (upper - lower) / upper.abs().max(1.0)
}

/// Solve every scenario subproblem at `plan`, in scenario order.
pub fn solve_all_subproblems(
    inst: &PlanningInstance,
    plan: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SubproblemResult>, BendersError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        inst.scenarios
            .par_iter()
            .map(|s| solve_subproblem(inst, s, plan, opts))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        inst.scenarios
            .iter()
            .map(|s| solve_subproblem(inst, s, plan, opts))
            .collect()
    }
}

/// Expected total cost of committing to `plan`: transfer cost plus weighted recourse.
pub fn evaluate_plan(
    inst: &PlanningInstance,
    plan: &[f64],
    opts: &SolverOptions,
) -> Result<(f64, Vec<SubproblemResult>), BendersError> {
    let results = solve_all_subproblems(inst, plan, opts)?;
    let recourse: f64 = inst
        .scenarios
        .iter()
        .zip(&results)
        .map(|(s, r)| s.probability * r.cost)
        .sum();
    Ok((inst.first_stage_cost(plan) + recourse, results))
}

fn assemble(
    inst: &PlanningInstance,
    plan: &[f64],
    results: Vec<SubproblemResult>,
    objective: f64,
) -> PlanningSolution {
    let plan_cols: Vec<usize> = (0..plan.len()).collect();
    PlanningSolution {
        planned_interchange: link_flows(inst, &plan_cols, plan),
        scenarios: results.into_iter().map(|r| r.second_stage).collect(),
        objective_value: objective,
    }
}

/// Iterate master and subproblems until the relative gap closes.
///
/// Returns `converged = false` with the full trace when the iteration budget
/// runs out; the final solution is then the best plan found.
pub fn run_benders(
    inst: &PlanningInstance,
    opts: &BendersOptions,
) -> Result<BendersReport, BendersError> {
    let report = validate_instance(inst);
    if !report.is_ok() {
        return Err(ModelError::Invalid(report).into());
    }
    let probabilities: Vec<(String, f64)> = inst
        .scenarios
        .iter()
        .map(|s| (s.id.clone(), s.probability))
        .collect();

    let mut cuts: Vec<Cut> = Vec::new();
    let mut records = Vec::new();
    let mut lower = f64::NEG_INFINITY;
    let mut best: Option<(f64, Vec<f64>, Vec<SubproblemResult>)> = None;
    let mut converged = false;
    // with every capacity at zero the plan space is one point and its cost is exact
    let single_plan = inst.links.iter().all(|l| l.capacity == 0.0);

    for iteration in 1..=opts.max_iterations {
        let master = solve_master(inst, &cuts, opts.alpha_down, &opts.lp)?;
        lower = lower.max(master.lower_bound);
        let (upper, results) = evaluate_plan(inst, &master.plan, &opts.lp)?;
        if single_plan {
            lower = lower.max(upper);
        }
        let cut = aggregate_cut(&results, &probabilities, &master.plan, iteration)?;
        if best.as_ref().is_none_or(|(b, _, _)| upper < *b) {
            best = Some((upper, master.plan.clone(), results));
        }
        let best_upper = best.as_ref().map(|b| b.0).expect("set above");
        let gap = relative_gap(best_upper, lower);
        records.push(IterationRecord {
            iteration,
            plan: master.plan,
            master_objective: master.lower_bound,
            lower_bound: lower,
            upper_bound: upper,
            best_upper_bound: best_upper,
            gap,
            cut: cut.clone(),
        });
        if gap <= opts.rel_gap {
            converged = true;
            break;
        }
        cuts.push(cut);
    }

    let (objective, plan, results) = best.expect("at least one iteration");
    let gap = records.last().map_or(f64::INFINITY, |r| r.gap);
    Ok(BendersReport {
        links: inst.links.iter().map(|l| l.key()).collect(),
        final_solution: assemble(inst, &plan, results, objective),
        iterations: records,
        objective,
        converged,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, solve_extensive};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    /// Brute-force value of the T1 s2 recourse as a function of the plan:
    /// B needs 50, A needs 40; gas at 50 $/MWh, shortage 1000, deviation 5.
    fn t1_s2_cost(plan: f64) -> f64 {
        let sent = plan.min(50.0);
        50.0 * (40.0 + sent) + 1000.0 * (50.0 - sent) + 5.0 * (plan - sent)
    }

    #[test]
    fn subproblem_s1_at_plan_50() {
        let inst = fixtures::t1();
        let r = solve_subproblem(&inst, &inst.scenarios[0], &[50.0], &opts()).unwrap();
        assert!((r.cost - 3600.0).abs() < 1e-9);
        assert!((r.duals_plan[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn subproblem_s2_dual_is_a_subgradient() {
        let inst = fixtures::t1();
        let r = solve_subproblem(&inst, &inst.scenarios[1], &[50.0], &opts()).unwrap();
        assert!((r.cost - 4500.0).abs() < 1e-9);
        // plan 50 is a kink: one-sided slopes are -950 (left) and +5 (right)
        let eps = 1e-3;
        let left = (t1_s2_cost(50.0) - t1_s2_cost(50.0 - eps)) / eps;
        let right = (t1_s2_cost(50.0 + eps) - t1_s2_cost(50.0)) / eps;
        assert!((left + 950.0).abs() < 1e-6 && (right - 5.0).abs() < 1e-6);
        let mu = r.duals_plan[0];
        assert!(mu >= left - 1e-6 && mu <= right + 1e-6, "mu = {mu}");
    }

    #[test]
    fn zero_plan_zero_demand_costs_only_fixed_output() {
        let mut inst = fixtures::t1();
        inst.fuels.push(crate::model::Fuel {
            id: "nuclear".into(),
            category: crate::model::FuelCategory::Fixed,
        });
        inst.generators.push(crate::model::GeneratorSpec {
            region: "B".into(),
            fuel: "nuclear".into(),
            category: None,
            rated_power: 30.0,
            available_power: 20.0,
            production_cost: 7.0,
        });
        let mut s = inst.scenarios[0].clone();
        s.demand.values_mut().for_each(|d| *d = 0.0);
        let r = solve_subproblem(&inst, &s, &[0.0], &opts()).unwrap();
        assert!((r.cost - 140.0).abs() < 1e-9);
    }

    #[test]
    fn cut_collapses_for_flat_single_scenario() {
        let inst = fixtures::single(1.0, 1.0);
        let res = SubproblemResult {
            scenario: "s1".into(),
            cost: 100.0,
            duals_plan: vec![],
            second_stage: solve_subproblem(&inst, &inst.scenarios[0], &[], &opts())
                .unwrap()
                .second_stage,
        };
        let cut = aggregate_cut(&[res], &[("s1".into(), 1.0)], &[], 1).unwrap();
        assert_eq!(cut.constant, 100.0);
        assert!(cut.gradient.is_empty());
    }

    #[test]
    fn t1_cut_is_tight_at_generating_plan() {
        let inst = fixtures::t1();
        let results = solve_all_subproblems(&inst, &[50.0], &opts()).unwrap();
        let probs: Vec<_> = inst
            .scenarios
            .iter()
            .map(|s| (s.id.clone(), s.probability))
            .collect();
        let cut = aggregate_cut(&results, &probs, &[50.0], 1).unwrap();
        assert!((cut.value_at(&[50.0]) - 4050.0).abs() < 1e-9);
        let expected_gradient = 0.5 * results[0].duals_plan[0] + 0.5 * results[1].duals_plan[0];
        assert!((cut.gradient[0] - expected_gradient).abs() < 1e-12);
    }

    #[test]
    fn mismatched_scenarios_are_structural_errors() {
        let inst = fixtures::t1();
        let results = solve_all_subproblems(&inst, &[50.0], &opts()).unwrap();
        let probs = vec![("s2".to_string(), 0.5), ("s1".to_string(), 0.5)];
        assert!(matches!(
            aggregate_cut(&results, &probs, &[50.0], 1),
            Err(BendersError::Mismatch(_))
        ));
        assert!(aggregate_cut(&results[..1], &probs, &[50.0], 1).is_err());
    }

    #[test]
    fn master_without_cuts_plans_nothing() {
        let inst = fixtures::t1();
        let m = solve_master(&inst, &[], 0.0, &opts()).unwrap();
        assert_eq!(m.plan, vec![0.0]);
        assert_eq!(m.lower_bound, 0.0);
    }

    fn m_cut() -> Cut {
        Cut {
            constant: 4600.0,
            gradient: vec![-940.0],
            source_iteration: 1,
        }
    }

    #[test]
    fn master_follows_steep_cut_to_capacity() {
        let inst = fixtures::t1();
        // with alpha free below, the cut slope beats the transfer cost up to capacity
        let m = solve_master(&inst, &[m_cut()], -1e9, &opts()).unwrap();
        assert!((m.plan[0] - 60.0).abs() < 1e-9);
        assert!((m.lower_bound - (10.0 * 60.0 + 4600.0 - 940.0 * 60.0)).abs() < 1e-6);
        // alpha_down = 0 stops the descent where the cut crosses zero
        let m = solve_master(&inst, &[m_cut()], 0.0, &opts()).unwrap();
        assert!((m.plan[0] - 4600.0 / 940.0).abs() < 1e-9);
        assert!((m.lower_bound - 10.0 * 4600.0 / 940.0).abs() < 1e-9);
    }

    #[test]
    fn t1_converges_to_extensive_optimum() {
        let inst = fixtures::t1();
        let report = run_benders(&inst, &BendersOptions::default()).unwrap();
        assert!(report.converged);
        assert!((report.objective - 4550.0).abs() / 4550.0 < 1e-5);
        assert!((report.final_solution.plan("A", "B").unwrap() - 50.0).abs() < 1e-6);
        let (ext, _) = solve_extensive(&inst, &opts()).unwrap();
        assert!((ext.objective_value - report.objective).abs() / 4550.0 < 1e-6);
    }

    #[test]
    fn single_scenario_matches_deterministic_optimum() {
        let inst = fixtures::t1().with_scenarios(vec![{
            let mut s = fixtures::t1().scenarios[1].clone();
            s.probability = 1.0;
            s
        }]);
        let report = run_benders(&inst, &BendersOptions::default()).unwrap();
        let (ext, _) = solve_extensive(&inst, &opts()).unwrap();
        assert!(report.converged);
        assert!((report.objective - ext.objective_value).abs() < 1e-6);
    }

    #[test]
    fn zero_capacity_links_converge_immediately() {
        let mut inst = fixtures::t1();
        inst.links[0].capacity = 0.0;
        let report = run_benders(&inst, &BendersOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations.len(), 1);
    }
}
