use crate::lp::{LinearProgram, Relation};

use super::{validate_instance, FuelCategory, ModelError, PlanningInstance, Scenario};

/// Column indices of one scenario's second-stage variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVars {
    /// One per generator, in `instance.generators` order.
    pub prod: Vec<usize>,
    /// One per link, in `instance.links` order.
    pub actual: Vec<usize>,
    pub dev: Vec<usize>,
    /// One per region, in `instance.regions` order.
    pub short: Vec<usize>,
    pub excess: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayout {
    pub plan: Vec<usize>,
    pub scenarios: Vec<ScenarioVars>,
}

/// Compile the two-stage stochastic program into one LP.
///
/// Columns: planned interchange per link, then per scenario the production,
/// actual flow, deviation, shortage and excess blocks. Transfer cost on the
/// plan is charged once; every second-stage term is weighted by its
/// scenario probability.
pub fn build_extensive_form(
    inst: &PlanningInstance,
) -> Result<(LinearProgram, ModelLayout), ModelError> {
    let report = validate_instance(inst);
    if !report.is_ok() {
        return Err(ModelError::Invalid(report));
    }
    let mut lp = LinearProgram::new();
    let plan = add_plan_vars(&mut lp, inst, true);
    for (k, l) in inst.links.iter().enumerate() {
        lp.add_row(
            format!("plan_cap[{}]", l.key()),
            vec![(plan[k], 1.0)],
            Relation::Le,
            l.capacity,
        );
    }
    let scenarios = inst
        .scenarios
        .iter()
        .map(|s| add_second_stage(&mut lp, inst, s, s.probability, &plan))
        .collect();
    Ok((lp, ModelLayout { plan, scenarios }))
}

pub(crate) fn add_plan_vars(
    lp: &mut LinearProgram,
    inst: &PlanningInstance,
    charge: bool,
) -> Vec<usize> {
    inst.links
        .iter()
        .map(|l| {
            let cost = if charge { l.transfer_cost } else { 0.0 };
            lp.add_var(format!("plan[{}]", l.key()), cost, 0.0, f64::INFINITY)
        })
        .collect()
}

/// Append one scenario's variables and rows, objective terms scaled by `weight`.
pub(crate) fn add_second_stage(
    lp: &mut LinearProgram,
    inst: &PlanningInstance,
    s: &Scenario,
    weight: f64,
    plan: &[usize],
) -> ScenarioVars {
    let sid = &s.id;
    let prod: Vec<usize> = inst
        .generators
        .iter()
        .map(|g| {
            lp.add_var(
                format!("prod[{},{},{sid}]", g.region, g.fuel),
                weight * g.production_cost,
                0.0,
                f64::INFINITY,
            )
        })
        .collect();
    let actual: Vec<usize> = inst
        .links
        .iter()
        .map(|l| {
            lp.add_var(
                format!("actual[{},{sid}]", l.key()),
                0.0,
                0.0,
                f64::INFINITY,
            )
        })
        .collect();
    let dev: Vec<usize> = inst
        .links
        .iter()
        .map(|l| {
            lp.add_var(
                format!("dev[{},{sid}]", l.key()),
                weight * l.deviation_penalty,
                0.0,
                f64::INFINITY,
            )
        })
        .collect();
    let short: Vec<usize> = inst
        .regions
        .iter()
        .map(|r| {
            lp.add_var(
                format!("short[{r},{sid}]"),
                weight * inst.shortage_cost[r],
                0.0,
                f64::INFINITY,
            )
        })
        .collect();
    let excess: Vec<usize> = inst
        .regions
        .iter()
        .map(|r| {
            lp.add_var(
                format!("excess[{r},{sid}]"),
                weight * inst.excess_cost,
                0.0,
                f64::INFINITY,
            )
        })
        .collect();

    for (g, &p) in inst.generators.iter().zip(&prod) {
        let tag = format!("{},{},{sid}", g.region, g.fuel);
        lp.add_row(
            format!("cap[{tag}]"),
            vec![(p, 1.0)],
            Relation::Le,
            g.rated_power,
        );
        match inst.generator_category(g).expect("validated") {
            FuelCategory::Fixed => lp.add_row(
                format!("fixed[{tag}]"),
                vec![(p, 1.0)],
                Relation::Eq,
                g.available_power,
            ),
            FuelCategory::Dispatchable => lp.add_row(
                format!("avail[{tag}]"),
                vec![(p, 1.0)],
                Relation::Le,
                g.available_power,
            ),
            FuelCategory::Variable => lp.add_row(
                format!("vrrg[{tag}]"),
                vec![(p, 1.0)],
                Relation::Le,
                s.vrrg(&g.region, &g.fuel).expect("validated"),
            ),
        };
    }
    for (k, l) in inst.links.iter().enumerate() {
        let tag = format!("{},{sid}", l.key());
        // flow i->j is capped by the plan for i->j
        lp.add_row(
            format!("flow[{tag}]"),
            vec![(actual[k], 1.0), (plan[k], -1.0)],
            Relation::Le,
            0.0,
        );
        lp.add_row(
            format!("devdef[{tag}]"),
            vec![(dev[k], 1.0), (plan[k], -1.0), (actual[k], 1.0)],
            Relation::Eq,
            0.0,
        );
    }
    for (ri, region) in inst.regions.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = inst
            .generators
            .iter()
            .zip(&prod)
            .filter(|(g, _)| &g.region == region)
            .map(|(_, &p)| (p, 1.0))
            .collect();
        for (k, l) in inst.links.iter().enumerate() {
            if &l.from == region {
                coeffs.push((actual[k], -1.0));
            }
            if &l.to == region {
                coeffs.push((actual[k], 1.0));
            }
        }
        coeffs.push((short[ri], 1.0));
        coeffs.push((excess[ri], -1.0));
        lp.add_row(
            format!("balance[{region},{sid}]"),
            coeffs,
            Relation::Eq,
            s.demand[region],
        );
    }
    ScenarioVars {
        prod,
        actual,
        dev,
        short,
        excess,
    }
}

/// One scenario's recourse problem with the plan pinned by equality rows.
///
/// The duals of `fix_rows` are the plan sensitivities used for optimality cuts.
#[derive(Debug, Clone)]
pub struct SecondStage {
    pub lp: LinearProgram,
    pub plan: Vec<usize>,
    pub fix_rows: Vec<usize>,
    pub vars: ScenarioVars,
}

impl SecondStage {
    /// Unweighted: the objective is the scenario's own cost, no probability factor.
    pub fn build(inst: &PlanningInstance, scenario: &Scenario, fixed_plan: &[f64]) -> Self {
        let mut lp = LinearProgram::new();
        let plan = add_plan_vars(&mut lp, inst, false);
        let fix_rows = inst
            .links
            .iter()
            .enumerate()
            .map(|(k, l)| {
                lp.add_row(
                    format!("fix_plan[{}]", l.key()),
                    vec![(plan[k], 1.0)],
                    Relation::Eq,
                    fixed_plan[k],
                )
            })
            .collect();
        let vars = add_second_stage(&mut lp, inst, scenario, 1.0, &plan);
        Self {
            lp,
            plan,
            fix_rows,
            vars,
        }
    }
}
