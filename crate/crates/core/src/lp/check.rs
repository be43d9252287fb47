use serde::{Deserialize, Serialize};

use super::{LinearProgram, LpSolution, Relation};

/// Optimality certificate residuals for a claimed optimal solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Max absolute row or bound violation.
    pub primal_residual: f64,
    /// Max row violation divided by `max(1, |rhs|)`, or bound violation.
    pub scaled_primal_residual: f64,
    /// Max sign violation of row duals or of reduced costs against bounds.
    pub dual_residual: f64,
    /// Max |multiplier x slack| over rows and bounds.
    pub complementarity: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal - dual| / max(1, |primal|)`.
    pub duality_gap: f64,
}

/// Residuals of `solution` against `lp`. Pure; never mutates either.
pub fn check_solution(lp: &LinearProgram, solution: &LpSolution) -> ResidualReport {
    let x = &solution.primal;
    let y = &solution.duals;

    let mut primal_residual = 0.0_f64;
    let mut scaled_primal_residual = 0.0_f64;
    let mut dual_residual = 0.0_f64;
    let mut complementarity = 0.0_f64;
    let mut dual_objective = 0.0;

    let mut reduced = lp.objective.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        let act = lp.row_activity(i, x);
        let slack = row.rhs - act;
        let viol = match row.relation {
            Relation::Le => (-slack).max(0.0),
            Relation::Ge => slack.max(0.0),
            Relation::Eq => slack.abs(),
        };
        primal_residual = primal_residual.max(viol);
        scaled_primal_residual = scaled_primal_residual.max(viol / row.rhs.abs().max(1.0));
        let sign_viol = match row.relation {
            Relation::Le => y[i].max(0.0),
            Relation::Ge => (-y[i]).max(0.0),
            Relation::Eq => 0.0,
        };
        dual_residual = dual_residual.max(sign_viol);
        if row.relation != Relation::Eq {
            complementarity = complementarity.max((y[i] * slack).abs());
        }
        dual_objective += y[i] * row.rhs;
        for &(j, a) in &row.coeffs {
            reduced[j] -= y[i] * a;
        }
    }

    for (j, &d) in reduced.iter().enumerate() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let bound_viol = (lo - x[j]).max(0.0).max((x[j] - hi).max(0.0));
        primal_residual = primal_residual.max(bound_viol);
        scaled_primal_residual = scaled_primal_residual.max(bound_viol);
        // d = z_lo - z_up with z_lo, z_up >= 0
        let z_lo = d.max(0.0);
        let z_up = (-d).max(0.0);
        dual_objective += z_lo * lo;
        if hi.is_finite() {
            dual_objective -= z_up * hi;
            complementarity = complementarity.max((z_up * (hi - x[j])).abs());
        } else {
            dual_residual = dual_residual.max(z_up);
        }
        complementarity = complementarity.max((z_lo * (x[j] - lo)).abs());
    }

    let primal_objective = lp.objective_value(x);
    ResidualReport {
        primal_residual,
        scaled_primal_residual,
        dual_residual,
        complementarity,
        primal_objective,
        dual_objective,
        duality_gap: (primal_objective - dual_objective).abs() / primal_objective.abs().max(1.0),
    }
}
