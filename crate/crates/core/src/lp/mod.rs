//! Generic linear programs and a bounded-variable revised simplex solver.
//!
//! Problems are always minimizations. Duals follow one convention everywhere
//! in this crate: the dual of a row is the sensitivity of the optimal
//! objective to that row's right-hand side, `y_i = d(objective)/d(rhs_i)`.
//! For a minimization this means `<=` rows have `y <= 0`, `>=` rows have
//! `y >= 0`, and equality rows are free.

mod check;
mod mps;
mod simplex;

pub use check::{check_solution, ResidualReport};
pub use mps::write_fixed_mps;
pub use simplex::{solve, SolverOptions};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A minimization LP: `min c'x` subject to rows and per-variable bounds.
///
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("row {row} references undeclared variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("variable {0} has bounds lower > upper")]
    EmptyBounds(usize),
    #[error("variable {0} has an infinite lower bound")]
    InfiniteLower(usize),
    #[error("row {row} mentions variable {var} twice")]
    DuplicateEntry { row: usize, var: usize },
    #[error("basis matrix became numerically singular")]
    Singular,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.var_names.push(name.into());
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    /// Structural checks: indices in range, finite data, sane bounds.
    pub fn check_structure(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::NonFinite {
                    what: "objective coefficient",
                    index: j,
                });
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::NonFinite {
                    what: "bound",
                    index: j,
                });
            }
            if !self.lower[j].is_finite() {
                return Err(LpError::InfiniteLower(j));
            }
            if self.lower[j] > self.upper[j] {
                return Err(LpError::EmptyBounds(j));
            }
        }
        let mut seen = vec![usize::MAX; n];
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite {
                    what: "rhs",
                    index: i,
                });
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::UnknownVariable { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite {
                        what: "constraint coefficient",
                        index: i,
                    });
                }
                if seen[j] == i {
                    return Err(LpError::DuplicateEntry { row: i, var: j });
                }
                seen[j] = i;
            }
        }
        Ok(())
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Copy with every objective coefficient multiplied by `factor`.
    pub fn scaled_objective(&self, factor: f64) -> Self {
        let mut lp = self.clone();
        for c in &mut lp.objective {
            *c *= factor;
        }
        lp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One entry per row, `d(objective)/d(rhs)`.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
