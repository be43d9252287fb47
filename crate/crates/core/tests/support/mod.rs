//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code, clippy::needless_range_loop)]

use gridplan_core::lp::{LinearProgram, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Two noisy blobs around (0, 0) and (100, 100), `per` points each.
pub fn two_blobs(seed: u64, per: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 5.0).unwrap();
    let mut pts = Vec::new();
    for centre in [0.0, 100.0] {
        for _ in 0..per {
            pts.push(vec![
                centre + noise.sample(&mut rng),
                centre + noise.sample(&mut rng),
            ]);
        }
    }
    pts
}

pub fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=6);
    let m = rng.random_range(1..=4);
    let mut lp = LinearProgram::new();
    for j in 0..n {
        let lo = if rng.random_bool(0.2) {
            rng.random_range(-3..=1) as f64
        } else {
            0.0
        };
        let hi = lo + rng.random_range(1..=10) as f64;
        lp.add_var(format!("x{j}"), rng.random_range(-10..=10) as f64, lo, hi);
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                coeffs.push((j, rng.random_range(-5..=5) as f64));
            }
        }
        let relation = match rng.random_range(0..3) {
            0 => Relation::Le,
            1 => Relation::Ge,
            _ => Relation::Eq,
        };
        lp.add_row(
            format!("r{i}"),
            coeffs,
            relation,
            rng.random_range(-10..=20) as f64,
        );
    }
    lp
}

/// Minimum objective over all vertices, or `None` if no feasible vertex exists.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // every candidate hyperplane as (coefficients, rhs)
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] = v;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&idx.iter().map(|&k| planes[k].clone()).collect::<Vec<_>>()) {
            if feasible(lp, &x) {
                let obj = lp.objective_value(&x);
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
        if !next_combination(&mut idx, planes.len()) {
            break;
        }
    }
    best
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < total - k + i {
            idx[i] += 1;
            for t in i + 1..k {
                idx[t] = idx[t - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn solve_square(planes: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = planes.len();
    let mut a: Vec<Vec<f64>> = planes
        .iter()
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(*b);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    let tol = 1e-9;
    for j in 0..x.len() {
        if x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol {
            return false;
        }
    }
    lp.rows.iter().enumerate().all(|(i, row)| {
        let act = lp.row_activity(i, x);
        match row.relation {
            Relation::Le => act <= row.rhs + tol,
            Relation::Ge => act >= row.rhs - tol,
            Relation::Eq => (act - row.rhs).abs() <= tol,
        }
    })
}

/// T1 recourse cost of one T1 scenario by enumerating the actual flow, capped by the plan, on a half-unit grid.
pub fn t1_recourse(plan: f64, demand_a: f64, demand_b: f64) -> f64 {
    (0..=120)
        .map(|i| i as f64 * 0.5)
        .filter(|&f| f <= plan && demand_a + f <= 100.0)
        .map(|f| 50.0 * (demand_a + f) + 5.0 * (f - plan).abs() + 1000.0 * (demand_b - f).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// (plan, expected cost) minimizing T1 over a half-unit plan grid.
pub fn t1_grid_optimum() -> (f64, f64) {
    (0..=120)
        .map(|i| i as f64 * 0.5)
        .map(|x| {
            (
                x,
                10.0 * x + 0.5 * t1_recourse(x, 40.0, 30.0) + 0.5 * t1_recourse(x, 40.0, 50.0),
            )
        })
        .fold((f64::NAN, f64::INFINITY), |best, c| {
            if c.1 < best.1 {
                c
            } else {
                best
            }
        })
}
