//! Acceptance gate: every criterion at its stated tolerance, one PASS/FAIL line each.
//! Runs as a plain binary (`cargo test -p gridplan-cli --test acceptance`) and exits 1 on any failure.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gridplan_core::analysis::{
    capacity_sensitivity, evpi, transmission_relaxation, SensitivityOptions, SolveMethod,
};
use gridplan_core::benders::{evaluate_plan, run_benders, BendersOptions, BendersReport};
use gridplan_core::lp::{check_solution, solve, LpStatus, SolverOptions};
use gridplan_core::model::{solve_extensive, PlanningInstance};
use gridplan_core::scenario::{kmeans, select_k_elbow, sq_dist, KMeansOptions, ScenarioSet};
use gridplan_core::synthetic::{binding_link, random_instance, shortage_stricken, t1, RandomShape};

struct Gate {
    failed: Vec<usize>,
}

impl Gate {
    fn check(&mut self, id: usize, name: &str, started: Instant, outcome: Result<String, String>) {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id:>2}] {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                println!("FAIL [{id:>2}] {name} ({secs:.2}s): {why}");
                self.failed.push(id);
            }
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random instances with 2-5 regions, 1-4 fuels and 2-8 scenarios.
fn corpus() -> Vec<(String, PlanningInstance)> {
    let mut out: Vec<(String, PlanningInstance)> = (0..60)
        .map(|s| {
            (
                format!("random seed {s}"),
                random_instance(s, &RandomShape::default()),
            )
        })
        .collect();
    out.push(("t1".into(), t1()));
    out.push(("shortage-stricken".into(), shortage_stricken()));
    out.push(("binding-link".into(), binding_link()));
    out
}

fn oracle_equivalence() -> Result<String, String> {
    let opts = BendersOptions::default();
    let mut worst: f64 = 0.0;
    for seed in 0..60 {
        let inst = random_instance(seed, &RandomShape::default());
        let (ext, _) = solve_extensive(&inst, &SolverOptions::default())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let b = run_benders(&inst, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
        let r = rel(b.objective, ext.objective_value);
        ensure(b.converged && r <= 1e-5, || {
            format!(
                "seed {seed}: benders {} vs extensive {}",
                b.objective, ext.objective_value
            )
        })?;
        worst = worst.max(r);
    }
    Ok(format!(
        "60 instances, worst relative difference {worst:.1e}"
    ))
}

fn t1_agreement() -> Result<String, String> {
    let (grid_plan, grid_cost) = support::t1_grid_optimum();
    let inst = t1();
    let (ext, _) = solve_extensive(&inst, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let b = run_benders(&inst, &BendersOptions::default()).map_err(|e| e.to_string())?;
    let plans = [
        ext.plan("A", "B").unwrap(),
        b.final_solution.plan("A", "B").unwrap(),
        grid_plan,
    ];
    for (who, obj) in [
        ("extensive", ext.objective_value),
        ("benders", b.objective),
        ("grid", grid_cost),
    ] {
        ensure(rel(obj, 4550.0) <= 1e-5, || {
            format!("{who} objective {obj}")
        })?;
    }
    ensure(plans.iter().all(|p| (p - 50.0).abs() <= 1e-4), || {
        format!("plans {plans:?}")
    })?;
    Ok(format!(
        "objective 4550 and plan 50 from extensive, Benders and grid ({} Benders iterations)",
        b.iterations.len()
    ))
}

fn lp_soundness() -> Result<String, String> {
    let (mut optimal, mut infeasible) = (0, 0);
    let (mut gap, mut slack): (f64, f64) = (0.0, 0.0);
    for seed in 0..300 {
        let lp = support::random_lp(seed);
        let sol = solve(&lp, &SolverOptions::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        match support::vertex_enumeration(&lp) {
            None => {
                ensure(sol.status == LpStatus::Infeasible, || {
                    format!("seed {seed}: oracle infeasible, solver {:?}", sol.status)
                })?;
                infeasible += 1;
            }
            Some(best) => {
                ensure(sol.status == LpStatus::Optimal, || {
                    format!("seed {seed}: status {:?}", sol.status)
                })?;
                ensure(rel(sol.objective, best) <= 1e-6, || {
                    format!("seed {seed}: {} vs oracle {best}", sol.objective)
                })?;
                let r = check_solution(&lp, &sol);
                ensure(r.duality_gap <= 1e-6 && r.complementarity <= 1e-6, || {
                    format!("seed {seed}: {r:?}")
                })?;
                gap = gap.max(r.duality_gap);
                slack = slack.max(r.complementarity);
                optimal += 1;
            }
        }
    }
    ensure(optimal >= 100, || format!("only {optimal} optimal LPs"))?;
    Ok(format!(
        "{optimal} optimal + {infeasible} infeasible LPs; max duality gap {gap:.1e}, max complementarity {slack:.1e}"
    ))
}

fn benders_invariants(
    inst: &PlanningInstance,
    report: &BendersReport,
    tol: f64,
) -> Result<(), String> {
    let its = &report.iterations;
    for w in its.windows(2) {
        ensure(w[1].lower_bound >= w[0].lower_bound, || {
            "lower bound decreased".into()
        })?;
        ensure(w[1].best_upper_bound <= w[0].best_upper_bound, || {
            "best upper bound increased".into()
        })?;
    }
    ensure(report.converged && report.gap <= tol, || {
        format!("final gap {}", report.gap)
    })?;
    let final_plan = report.final_solution.plan_vector();
    let (final_total, _) =
        evaluate_plan(inst, &final_plan, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let final_recourse = final_total - inst.first_stage_cost(&final_plan);
    for it in its {
        let recourse = it.upper_bound - inst.first_stage_cost(&it.plan);
        let at_own = it.cut.value_at(&it.plan);
        ensure(rel(at_own, recourse) <= 1e-6, || {
            format!(
                "iteration {}: cut {at_own} vs recourse {recourse}",
                it.iteration
            )
        })?;
        let at_final = it.cut.value_at(&final_plan);
        ensure(
            at_final <= final_recourse + 1e-6 * final_recourse.abs().max(1.0),
            || {
                format!(
                    "iteration {}: cut {at_final} above final recourse {final_recourse}",
                    it.iteration
                )
            },
        )?;
    }
    Ok(())
}

fn structural_invariants() -> Result<String, String> {
    let opts = BendersOptions::default();
    let mut iterations = 0;
    let all = corpus();
    for (name, inst) in &all {
        let report = run_benders(inst, &opts).map_err(|e| format!("{name}: {e}"))?;
        benders_invariants(inst, &report, opts.rel_gap).map_err(|e| format!("{name}: {e}"))?;
        iterations += report.iterations.len();
    }
    Ok(format!(
        "{} runs, {iterations} iterations, every cut tight and valid",
        all.len()
    ))
}

fn stochastic_ordering() -> Result<String, String> {
    let opts = BendersOptions::default();
    let slack = |v: f64| 1e-6 * v.abs().max(1.0);
    let all = corpus();
    for (name, inst) in &all {
        let r = evpi(inst, SolveMethod::Benders, &opts).map_err(|e| format!("{name}: {e}"))?;
        ensure(
            r.ws <= r.rp + slack(r.rp) && r.rp <= r.eev + slack(r.eev),
            || format!("{name}: ws {} rp {} eev {}", r.ws, r.rp, r.eev),
        )?;
        ensure(r.evpi_standard >= -slack(r.rp), || {
            format!("{name}: evpi {}", r.evpi_standard)
        })?;
    }
    let r = evpi(&t1(), SolveMethod::Benders, &opts).map_err(|e| e.to_string())?;
    ensure(
        rel(r.ws, 4400.0) <= 1e-6 && rel(r.rp, 4550.0) <= 1e-6,
        || format!("t1: ws {} rp {}", r.ws, r.rp),
    )?;
    ensure((r.evpi_standard - 150.0).abs() <= 1e-6 * 4550.0, || {
        format!("t1: evpi {}", r.evpi_standard)
    })?;
    Ok(format!(
        "ws <= rp <= eev on {} instances; t1 ws 4400, rp 4550, evpi 150",
        all.len()
    ))
}

fn expansion_direction() -> Result<String, String> {
    let inst = shortage_stricken();
    let opts = SensitivityOptions {
        delta: 30.0,
        ..Default::default()
    };
    let out = capacity_sensitivity(&inst, &opts, &BendersOptions::default())
        .map_err(|e| e.to_string())?;
    let savings: BTreeMap<&str, f64> = out
        .iter()
        .map(|e| (e.region.as_str(), e.saving.unwrap_or(f64::NAN)))
        .collect();
    ensure(savings.values().all(|&s| s >= -1e-6), || {
        format!("negative saving {savings:?}")
    })?;
    let c = savings["C"];
    ensure(savings.iter().all(|(r, &s)| *r == "C" || s < c), || {
        format!("C is not the strict maximum: {savings:?}")
    })?;
    Ok(format!(
        "savings {savings:.1?}; the short region C gains most"
    ))
}

fn transmission_direction() -> Result<String, String> {
    let opts = BendersOptions::default();
    let r = transmission_relaxation(&binding_link(), SolveMethod::Benders, &opts)
        .map_err(|e| e.to_string())?;
    ensure(r.unlimited.total < r.baseline.total, || {
        format!("total {} -> {}", r.baseline.total, r.unlimited.total)
    })?;
    ensure(r.unlimited.shortage < r.baseline.shortage, || {
        format!(
            "shortage {} -> {}",
            r.baseline.shortage, r.unlimited.shortage
        )
    })?;
    let t =
        transmission_relaxation(&t1(), SolveMethod::Benders, &opts).map_err(|e| e.to_string())?;
    ensure(rel(t.unlimited.total, t.baseline.total) <= 1e-6, || {
        format!("t1 {} vs {}", t.unlimited.total, t.baseline.total)
    })?;
    Ok(format!(
        "binding link: total {:.1} -> {:.1}, shortage {:.1} -> {:.1}; t1 unchanged",
        r.baseline.total, r.unlimited.total, r.baseline.shortage, r.unlimited.shortage
    ))
}

fn clustering_invariants(sets: &[ScenarioSet]) -> Result<String, String> {
    let pts = support::two_blobs(17, 100);
    let opts = KMeansOptions {
        seed: 5,
        ..Default::default()
    };
    for k in 1..=6 {
        let c = kmeans(&pts, k, &opts).map_err(|e| e.to_string())?;
        ensure(c.trace.windows(2).all(|w| w[1] <= w[0]), || {
            format!("k {k}: wcss trace {:?}", c.trace)
        })?;
    }
    let k = select_k_elbow(&pts, 6, &opts).map_err(|e| e.to_string())?;
    ensure(k == 2, || format!("elbow chose {k}"))?;
    let c = kmeans(&pts, 2, &opts).map_err(|e| e.to_string())?;
    for truth in [[0.0, 0.0], [100.0, 100.0]] {
        let d = c
            .centroids
            .iter()
            .map(|m| sq_dist(m, &truth).sqrt())
            .fold(f64::INFINITY, f64::min);
        ensure(d <= 5.0, || {
            format!("nearest centroid to {truth:?} is {d:.2} away")
        })?;
    }
    ensure(!sets.is_empty(), || {
        "no emitted scenario sets to check".into()
    })?;
    for s in sets {
        let total: f64 = s.scenarios.iter().map(|x| x.probability).sum();
        ensure((total - 1.0).abs() <= 1e-9, || {
            format!("{}: probabilities sum to {total}", s.group)
        })?;
    }
    Ok(format!(
        "wcss monotone for k = 1..6, elbow k = 2, {} emitted sets sum to 1",
        sets.len()
    ))
}

fn gridplan(dir: &Path, out: &Path, args: &[&str]) -> Result<String, String> {
    let cfg = dir.join("config.json");
    let o = Command::new(env!("CARGO_BIN_EXE_gridplan"))
        .args(args)
        .args(["--config", cfg.to_str().unwrap(), "--deterministic-names"])
        .env("GRIDPLAN_OUTPUT_DIR", out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.code() == Some(0), || {
        format!(
            "{args:?} exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        )
    })?;
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn pipeline(dir: &Path, out: &Path) -> Result<(), String> {
    for cmd in ["scenarios", "solve", "report"] {
        gridplan(dir, out, &[cmd])?;
    }
    Ok(())
}

fn scenario_sets(out: &Path) -> Result<Vec<ScenarioSet>, String> {
    (1..=12)
        .map(|m| {
            let path = out.join(format!("scenarios_m{m:02}.json"));
            let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| e.to_string())
        })
        .collect()
}

fn end_to_end(out: &Path) -> Result<String, String> {
    let sets = scenario_sets(out)?;
    ensure(sets.iter().all(|s| s.scenarios.len() == 4), || {
        "a month lacks 4 scenarios".into()
    })?;
    let agg: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out.join("report_aggregate.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut months: Vec<(u64, f64)> = agg["monthly"]
        .as_array()
        .ok_or("no monthly table")?
        .iter()
        .map(|r| {
            (
                r["key"].as_u64().unwrap(),
                r["totals"]["total"].as_f64().unwrap(),
            )
        })
        .collect();
    ensure(months.len() == 12, || {
        format!("{} months in report", months.len())
    })?;
    months.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut top = [months[0].0, months[1].0];
    top.sort();
    ensure(top == [7, 8], || format!("largest months are {top:?}"))?;
    Ok(format!(
        "12 sets of 4 scenarios; largest monthly totals in months {} and {}",
        months[0].0, months[1].0
    ))
}

fn json_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = e.map_err(|e| e.to_string())?.path();
        if path.extension().is_some_and(|x| x == "json") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

fn reproducible(first: &Path, second: &Path) -> Result<String, String> {
    let a = json_files(first)?;
    let b = json_files(second)?;
    ensure(a.keys().eq(b.keys()), || "different artifact sets".into())?;
    for (name, bytes) in &a {
        ensure(&b[name] == bytes, || format!("{name} differs"))?;
    }
    Ok(format!(
        "{} JSON artifacts byte-identical across two runs",
        a.len()
    ))
}

fn main() {
    let mut gate = Gate { failed: Vec::new() };

    let t = Instant::now();
    gate.check(
        1,
        "Benders matches the extensive form",
        t,
        oracle_equivalence(),
    );
    let t = Instant::now();
    gate.check(2, "T1 agrees with the grid oracle", t, t1_agreement());
    let t = Instant::now();
    gate.check(3, "LP solver matches vertex enumeration", t, lp_soundness());
    let t = Instant::now();
    gate.check(4, "Benders bounds and cuts", t, structural_invariants());
    let t = Instant::now();
    gate.check(5, "ws <= rp <= eev", t, stochastic_ordering());
    let t = Instant::now();
    gate.check(
        6,
        "capacity expansion favours the short region",
        t,
        expansion_direction(),
    );
    let t = Instant::now();
    gate.check(
        7,
        "uncapped transmission helps only when binding",
        t,
        transmission_direction(),
    );

    let work = tempfile::tempdir().expect("temp dir");
    let first = work.path().join("run1");
    let second = work.path().join("run2");
    let t = Instant::now();
    let fixture = Command::new(env!("CARGO_BIN_EXE_gridplan-fixture"))
        .arg(work.path())
        .args(["--seed", "7", "--cluster-seed", "7"])
        .output()
        .map_err(|e| e.to_string())
        .and_then(|o| {
            ensure(o.status.success(), || {
                String::from_utf8_lossy(&o.stderr).into_owned()
            })
        });
    let run1 = fixture.and_then(|_| pipeline(work.path(), &first));
    let sets = scenario_sets(&first).unwrap_or_default();

    let t8 = Instant::now();
    gate.check(8, "clustering invariants", t8, clustering_invariants(&sets));
    gate.check(
        9,
        "end-to-end synthetic year",
        t,
        run1.clone().and_then(|_| end_to_end(&first)),
    );
    let t = Instant::now();
    let run2 = run1.and_then(|_| pipeline(work.path(), &second));
    gate.check(
        10,
        "repeat run is byte-identical",
        t,
        run2.and_then(|_| reproducible(&first, &second)),
    );

    if gate.failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failed {:?}", gate.failed);
        std::process::exit(1);
    }
}
