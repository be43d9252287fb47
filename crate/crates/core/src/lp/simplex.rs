//! Two-phase bounded-variable revised simplex with an explicit dense basis
//! inverse.
//!
//! Every row `a_i x (<=|=|>=) b_i` gets a slack so that `a_i x + s_i = b_i`,
//! with `s_i` in `[0, inf)`, `(-inf, 0]` or `[0, 0]` respectively. Rows whose
//! slack cannot absorb the starting residual get an artificial column; phase
//! one drives the artificials to zero.

use super::{LinearProgram, LpError, LpSolution, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Pivot budget over both phases; `None` means `50 * (rows + columns)`.
    pub max_iterations: Option<usize>,
    pub feasibility_tol: f64,
    /// Reduced-cost tolerance, relative to `max(1, max |c_j|)`.
    pub optimality_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Simplex {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    first_artificial: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    status: Vec<VarStatus>,
    x: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Dense `B^-1`, row-major, `m * m`.
    binv: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    since_refactor: usize,
    refactor_interval: usize,
    degenerate_streak: usize,
    bland: bool,
    opts: SolverOptions,
}

/// Solve `lp` to optimality, or certify infeasibility/unboundedness.
///
/// Deterministic: the same input always yields the same output.
pub fn solve(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.check_structure()?;
    let mut s = Simplex::new(lp, opts);

    if s.cols.len() > s.first_artificial {
        s.set_phase_one_costs();
        match s.run_phase()? {
            PhaseOutcome::IterationLimit => return Ok(s.finish(lp, LpStatus::IterationLimit)),
            // phase one is bounded below by zero
            PhaseOutcome::Unbounded | PhaseOutcome::Optimal => {}
        }
        let infeasibility: f64 = (s.first_artificial..s.cols.len()).map(|j| s.x[j]).sum();
        let scale = lp.rows.iter().fold(1.0_f64, |acc, r| acc.max(r.rhs.abs()));
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(s.finish(lp, LpStatus::Infeasible));
        }
        s.retire_artificials()?;
    }

    s.set_phase_two_costs(lp);
    let status = match s.run_phase()? {
        PhaseOutcome::Optimal => LpStatus::Optimal,
        PhaseOutcome::Unbounded => LpStatus::Unbounded,
        PhaseOutcome::IterationLimit => LpStatus::IterationLimit,
    };
    s.refactor()?;
    s.recompute_basics();
    Ok(s.finish(lp, status))
}

impl Simplex {
    fn new(lp: &LinearProgram, opts: &SolverOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut status = vec![VarStatus::AtLower; n];
        let mut x = lp.lower.clone();

        // slacks
        for (i, row) in lp.rows.iter().enumerate() {
            cols.push(vec![(i, 1.0)]);
            let (lo, hi, st) = match row.relation {
                super::Relation::Le => (0.0, f64::INFINITY, VarStatus::AtLower),
                super::Relation::Ge => (f64::NEG_INFINITY, 0.0, VarStatus::AtUpper),
                super::Relation::Eq => (0.0, 0.0, VarStatus::AtLower),
            };
            lower.push(lo);
            upper.push(hi);
            status.push(st);
            x.push(0.0);
        }
        let first_artificial = n + m;

        let rhs: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
        let mut residual = rhs.clone();
        for (j, col) in cols.iter().enumerate().take(n) {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    residual[i] -= a * x[j];
                }
            }
        }

        let mut basis = vec![0; m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let slack = n + i;
            let r = residual[i];
            if r >= lower[slack] - opts.feasibility_tol && r <= upper[slack] + opts.feasibility_tol
            {
                basis[i] = slack;
                status[slack] = VarStatus::Basic;
                x[slack] = r;
                binv[i * m + i] = 1.0;
            } else {
                let bound = if r < lower[slack] {
                    lower[slack]
                } else {
                    upper[slack]
                };
                x[slack] = bound;
                status[slack] = if bound == lower[slack] {
                    VarStatus::AtLower
                } else {
                    VarStatus::AtUpper
                };
                let sign = if r - bound >= 0.0 { 1.0 } else { -1.0 };
                cols.push(vec![(i, sign)]);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                status.push(VarStatus::Basic);
                x.push((r - bound).abs());
                basis[i] = cols.len() - 1;
                binv[i * m + i] = sign;
            }
        }

        let ncols = cols.len();
        let max_iterations = opts.max_iterations.unwrap_or(50 * (m + n).max(1));
        Self {
            m,
            n,
            cols,
            first_artificial,
            lower,
            upper,
            cost: vec![0.0; ncols],
            status,
            x,
            rhs,
            basis,
            binv,
            iterations: 0,
            max_iterations,
            since_refactor: 0,
            refactor_interval: m.max(100),
            degenerate_streak: 0,
            bland: false,
            opts: *opts,
        }
    }

    fn set_phase_one_costs(&mut self) {
        for (j, c) in self.cost.iter_mut().enumerate() {
            *c = if j >= self.first_artificial { 1.0 } else { 0.0 };
        }
    }

    fn set_phase_two_costs(&mut self, lp: &LinearProgram) {
        for (j, c) in self.cost.iter_mut().enumerate() {
            *c = if j < self.n { lp.objective[j] } else { 0.0 };
        }
        self.degenerate_streak = 0;
        self.bland = false;
    }

    /// Fix artificials at zero and pivot basic ones out where possible.
    /// An artificial that cannot leave marks a redundant row and stays basic at zero.
    fn retire_artificials(&mut self) -> Result<(), LpError> {
        for j in self.first_artificial..self.cols.len() {
            self.upper[j] = 0.0;
            if self.status[j] != VarStatus::Basic {
                self.x[j] = 0.0;
                self.status[j] = VarStatus::AtLower;
            }
        }
        for r in 0..self.m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let row = &self.binv[r * self.m..(r + 1) * self.m];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let alpha: f64 = self.cols[j].iter().map(|&(i, a)| row[i] * a).sum();
                if alpha.abs() > 1e-7 && best.is_none_or(|(_, b)| alpha.abs() > b.abs()) {
                    best = Some((j, alpha));
                }
            }
            if let Some((j, _)) = best {
                let w = self.ftran(j);
                let leaving = self.basis[r];
                self.pivot(r, j, &w);
                self.x[leaving] = 0.0;
                self.status[leaving] = VarStatus::AtLower;
            }
        }
        self.refactor()?;
        self.recompute_basics();
        Ok(())
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut w = vec![0.0; m];
        for &(k, a) in &self.cols[j] {
            for (i, wi) in w.iter_mut().enumerate() {
                *wi += self.binv[i * m + k] * a;
            }
        }
        w
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (pos, &b) in self.basis.iter().enumerate() {
            let c = self.cost[b];
            if c != 0.0 {
                let row = &self.binv[pos * m..(pos + 1) * m];
                for (yk, &bk) in y.iter_mut().zip(row) {
                    *yk += c * bk;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        self.cost[j] - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
    }

    fn run_phase(&mut self) -> Result<PhaseOutcome, LpError> {
        let cmax = self.cost.iter().fold(1.0_f64, |acc, c| acc.max(c.abs()));
        let dtol = self.opts.optimality_tol * cmax;
        loop {
            if self.iterations >= self.max_iterations {
                return Ok(PhaseOutcome::IterationLimit);
            }
            let y = self.duals();

            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let eligible = (st == VarStatus::AtLower && d < -dtol)
                    || (st == VarStatus::AtUpper && d > dtol);
                if !eligible {
                    continue;
                }
                if self.bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d));
                }
            }
            let Some((j, d)) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let dir = if d < 0.0 { 1.0 } else { -1.0 };
            let w = self.ftran(j);

            // Harris two-pass ratio test
            let ftol = self.opts.feasibility_tol;
            let mut theta_max = f64::INFINITY;
            for (i, &wi) in w.iter().enumerate() {
                let alpha = dir * wi;
                let b = self.basis[i];
                if alpha > PIVOT_TOL && self.lower[b].is_finite() {
                    theta_max = theta_max.min((self.x[b] - self.lower[b] + ftol) / alpha);
                } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                    theta_max = theta_max.min((self.upper[b] - self.x[b] + ftol) / -alpha);
                }
            }
            let flip = self.upper[j] - self.lower[j];
            if theta_max.is_infinite() && flip.is_infinite() {
                return Ok(PhaseOutcome::Unbounded);
            }
            self.iterations += 1;

            if flip <= theta_max {
                for (i, &wi) in w.iter().enumerate() {
                    let b = self.basis[i];
                    self.x[b] -= dir * flip * wi;
                }
                if dir > 0.0 {
                    self.x[j] = self.upper[j];
                    self.status[j] = VarStatus::AtUpper;
                } else {
                    self.x[j] = self.lower[j];
                    self.status[j] = VarStatus::AtLower;
                }
                self.degenerate_streak = 0;
                self.bland = false;
                continue;
            }

            let mut leave: Option<(usize, f64, f64)> = None;
            for (i, &wi) in w.iter().enumerate() {
                let alpha = dir * wi;
                let b = self.basis[i];
                let ratio = if alpha > PIVOT_TOL && self.lower[b].is_finite() {
                    (self.x[b] - self.lower[b]) / alpha
                } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                    (self.upper[b] - self.x[b]) / -alpha
                } else {
                    continue;
                };
                if ratio > theta_max {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((li, lalpha, _)) => {
                        if self.bland {
                            b < self.basis[li]
                        } else {
                            alpha.abs() > lalpha.abs()
                        }
                    }
                };
                if better {
                    leave = Some((i, alpha, ratio));
                }
            }
            let (r, alpha, ratio) = leave.expect("finite theta_max implies a blocking row");
            let theta = ratio.max(0.0);

            for (i, &wi) in w.iter().enumerate() {
                let b = self.basis[i];
                self.x[b] -= dir * theta * wi;
            }
            self.x[j] += dir * theta;
            let leaving = self.basis[r];
            if alpha > 0.0 {
                self.x[leaving] = self.lower[leaving];
                self.status[leaving] = VarStatus::AtLower;
            } else {
                self.x[leaving] = self.upper[leaving];
                self.status[leaving] = VarStatus::AtUpper;
            }
            self.pivot(r, j, &w);

            if theta < DEGENERATE_STEP {
                self.degenerate_streak += 1;
                if self.degenerate_streak > 3 * self.m {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
                self.bland = false;
            }

            self.since_refactor += 1;
            if self.since_refactor >= self.refactor_interval {
                self.refactor()?;
                self.recompute_basics();
            }
        }
    }

    /// Replace the basic column at position `r` with column `j`, where `w = B^-1 a_j`.
    fn pivot(&mut self, r: usize, j: usize, w: &[f64]) {
        let m = self.m;
        let piv = w[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (row_r, after) = rest.split_at_mut(m);
        for v in row_r.iter_mut() {
            *v /= piv;
        }
        for (i, chunk) in before.chunks_mut(m).enumerate() {
            let f = w[i];
            if f != 0.0 {
                for (v, &p) in chunk.iter_mut().zip(row_r.iter()) {
                    *v -= f * p;
                }
            }
        }
        for (k, chunk) in after.chunks_mut(m).enumerate() {
            let f = w[r + 1 + k];
            if f != 0.0 {
                for (v, &p) in chunk.iter_mut().zip(row_r.iter()) {
                    *v -= f * p;
                }
            }
        }
        self.basis[r] = j;
        self.status[j] = VarStatus::Basic;
    }

    /// Rebuild `B^-1` from scratch by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![0.0; m * m];
        for (pos, &b) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[b] {
                a[i * m + pos] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-12 {
                return Err(LpError::Singular);
            }
            if p != c {
                for k in 0..m {
                    a.swap(c * m + k, p * m + k);
                    inv.swap(c * m + k, p * m + k);
                }
            }
            let piv = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= f * a[c * m + k];
                    inv[r * m + k] -= f * inv[c * m + k];
                }
            }
        }
        // `inv` is the inverse of B with rows ordered by basis position.
        self.binv = inv;
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut r = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.status[j] == VarStatus::Basic || self.x[j] == 0.0 {
                continue;
            }
            for &(i, a) in col {
                r[i] -= a * self.x[j];
            }
        }
        for pos in 0..m {
            let row = &self.binv[pos * m..(pos + 1) * m];
            let v: f64 = row.iter().zip(&r).map(|(b, ri)| b * ri).sum();
            self.x[self.basis[pos]] = v;
        }
    }

    fn finish(&self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        let primal = self.x[..self.n].to_vec();
        let duals = if status == LpStatus::Optimal {
            self.duals()
        } else {
            vec![0.0; self.m]
        };
        LpSolution {
            status,
            objective: lp.objective_value(&primal),
            primal,
            duals,
            iterations: self.iterations,
        }
    }
}
