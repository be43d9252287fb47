use std::collections::BTreeMap;

use gridplan_core::analysis::{
    aggregate_report, capacity_sensitivity, evpi, solve_instance, transmission_relaxation,
    EvpiReport, SensitivityOptions, SliceOutcome, SolveMethod, COST_CATEGORIES,
};
use gridplan_core::benders::{run_benders, BendersOptions, BendersReport};
use gridplan_core::model::{
    cost_breakdown, regional_breakdown, solve_extensive, CostBreakdown, PlanningInstance,
    PlanningSolution,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::load::{load, Slice};
use crate::output::Output;
use crate::{CliError, Command};

/// Print a line to stdout; a closed pipe is not an error worth panicking over.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub trace: bool,
    /// Slices run concurrently; results are still reported in slice order.
    pub parallel: bool,
    pub deterministic: bool,
}

impl Ctx {
    fn map_slices<T, F>(&self, slices: &[Slice], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&Slice) -> T + Sync + Send,
    {
        if self.parallel {
            slices.par_iter().map(f).collect()
        } else {
            slices.iter().map(f).collect()
        }
    }

    fn output(&self, command: Command) -> Result<Output, CliError> {
        Output::new(self.cfg.output_dir(), command.name(), self.deterministic)
    }

    fn method(&self) -> SolveMethod {
        self.cfg.solver.method
    }

    fn benders(&self) -> BendersOptions {
        self.cfg.solver.benders_options()
    }
}

pub fn dispatch(command: Command, ctx: &Ctx) -> Result<(), CliError> {
    match command {
        Command::Validate => validate(ctx),
        Command::Scenarios => scenarios(ctx),
        Command::Solve => solve(ctx),
        Command::Evpi => evpi_cmd(ctx),
        Command::Sensitivity => sensitivity(ctx),
        Command::Report => report(ctx),
    }
}

fn finish(out: Output) -> Result<(), CliError> {
    for path in out.finish()? {
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn num(v: f64) -> String {
    v.to_string()
}

fn breakdown_rows(b: &CostBreakdown) -> Vec<Vec<String>> {
    let values = [
        b.generation,
        b.transfer,
        b.shortage,
        b.deviation_penalty,
        b.excess,
        b.total,
    ];
    COST_CATEGORIES
        .iter()
        .zip(values)
        .map(|(c, v)| vec![c.to_string(), num(v)])
        .collect()
}

fn validate(ctx: &Ctx) -> Result<(), CliError> {
    let loaded = load(&ctx.cfg)?;
    if let Some(d) = &loaded.data {
        for w in &d.warnings {
            eprintln!("warning: {w}");
        }
        for s in &d.build.skipped {
            eprintln!("warning: slice {} skipped: {}", s.group, s.reason);
        }
    }
    let mut failures = Vec::new();
    for s in &loaded.slices {
        match &s.instance {
            Ok(inst) => say!(
                "slice={} ok regions={} links={} scenarios={}",
                s.label,
                inst.regions.len(),
                inst.links.len(),
                inst.scenarios.len()
            ),
            Err(e) => failures.push(format!("slice {}: {e}", s.label)),
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(failures.join("\n")))
    }
}

#[derive(Serialize)]
struct GroupSummary {
    group: String,
    k: usize,
    rows: usize,
    probability_sum: f64,
    wcss: f64,
}

#[derive(Serialize)]
struct ScenarioSummary<'a> {
    columns: &'a [String],
    groups: Vec<GroupSummary>,
    skipped: &'a [gridplan_core::scenario::SkippedGroup],
    rejected_records: usize,
    dropped_hours: usize,
    warnings: &'a [String],
}

fn scenarios(ctx: &Ctx) -> Result<(), CliError> {
    let loaded = load(&ctx.cfg)?;
    let data = loaded.data.ok_or_else(|| {
        CliError::Invalid("scenarios needs a data run (\"data\", \"costs\", \"scenarios\")".into())
    })?;
    let wanted: Vec<String> = loaded.slices.iter().map(|s| s.label.clone()).collect();
    let mut out = ctx.output(Command::Scenarios)?;
    let mut groups = Vec::new();
    let mut header: Vec<&str> = vec!["id", "probability"];
    header.extend(data.columns.iter().map(String::as_str));
    for (key, set) in &data.build.sets {
        let label = key.to_string();
        if !wanted.contains(&label) {
            continue;
        }
        out.json(&label, set)?;
        let rows = set
            .scenarios
            .iter()
            .zip(&set.centroids)
            .map(|(s, c)| {
                let mut row = vec![s.id.clone(), num(s.probability)];
                row.extend(c.iter().map(|v| num(*v)));
                row
            })
            .collect();
        out.csv(&label, &header, rows)?;
        let probability_sum: f64 = set.scenarios.iter().map(|s| s.probability).sum();
        say!(
            "slice={label} k={} rows={} wcss={}",
            set.k,
            set.rows,
            set.wcss
        );
        groups.push(GroupSummary {
            group: label,
            k: set.k,
            rows: set.rows,
            probability_sum,
            wcss: set.wcss,
        });
    }
    for s in &data.build.skipped {
        eprintln!("warning: slice {} skipped: {}", s.group, s.reason);
    }
    out.json(
        "summary",
        &ScenarioSummary {
            columns: &data.columns,
            groups,
            skipped: &data.build.skipped,
            rejected_records: data.rejected_records,
            dropped_hours: data.dropped_hours,
            warnings: &data.warnings,
        },
    )?;
    finish(out)
}

struct SliceSolve {
    solution: PlanningSolution,
    breakdown: CostBreakdown,
    regional: BTreeMap<String, CostBreakdown>,
    benders: Option<BendersReport>,
    converged: bool,
    gap: f64,
    iterations: usize,
}

fn solve_slice(
    inst: &PlanningInstance,
    method: SolveMethod,
    opts: &BendersOptions,
) -> Result<SliceSolve, CliError> {
    let (solution, benders, converged, gap, iterations) = match method {
        SolveMethod::Extensive => {
            let (sol, lp) = solve_extensive(inst, &opts.lp)?;
            (sol, None, true, 0.0, lp.iterations)
        }
        SolveMethod::Benders => {
            let report = run_benders(inst, opts)?;
            let (converged, gap, n) = (report.converged, report.gap, report.iterations.len());
            (
                report.final_solution.clone(),
                Some(report),
                converged,
                gap,
                n,
            )
        }
    };
    Ok(SliceSolve {
        breakdown: cost_breakdown(inst, &solution),
        regional: regional_breakdown(inst, &solution),
        solution,
        benders,
        converged,
        gap,
        iterations,
    })
}

#[derive(Serialize)]
struct SolveArtifact<'a> {
    slice: &'a str,
    method: SolveMethod,
    converged: bool,
    objective: f64,
    gap: f64,
    iterations: usize,
    breakdown: &'a CostBreakdown,
    regional: &'a BTreeMap<String, CostBreakdown>,
    solution: &'a PlanningSolution,
}

fn solve(ctx: &Ctx) -> Result<(), CliError> {
    let (_, slices) = load(&ctx.cfg)?.require_valid()?;
    let method = ctx.method();
    let opts = ctx.benders();
    let results = ctx.map_slices(&slices, |s| solve_slice(&s.instance, method, &opts));
    let mut out = ctx.output(Command::Solve)?;
    let mut summary = Vec::new();
    let mut stalled = Vec::new();
    for (s, r) in slices.iter().zip(results) {
        let r = r?;
        let label = s.label.as_str();
        if let Some(b) = &r.benders {
            if ctx.trace {
                for it in &b.iterations {
                    say!(
                        "trace slice={label} iteration={} lower={} upper={} best_upper={} gap={:e}",
                        it.iteration,
                        it.lower_bound,
                        it.upper_bound,
                        it.best_upper_bound,
                        it.gap
                    );
                }
            }
            out.json(&format!("{label}_benders"), b)?;
            out.csv(
                &format!("{label}_trace"),
                &[
                    "iteration",
                    "master_objective",
                    "lower_bound",
                    "upper_bound",
                    "best_upper_bound",
                    "gap",
                ],
                b.iterations
                    .iter()
                    .map(|it| {
                        vec![
                            it.iteration.to_string(),
                            num(it.master_objective),
                            num(it.lower_bound),
                            num(it.upper_bound),
                            num(it.best_upper_bound),
                            num(it.gap),
                        ]
                    })
                    .collect(),
            )?;
        }
        let objective = r.solution.objective_value;
        say!(
            "slice={label} objective={objective:.6} gap={:e} iterations={}{}",
            r.gap.max(0.0),
            r.iterations,
            if r.converged { "" } else { " converged=false" }
        );
        out.json(
            label,
            &SolveArtifact {
                slice: label,
                method,
                converged: r.converged,
                objective,
                gap: r.gap,
                iterations: r.iterations,
                breakdown: &r.breakdown,
                regional: &r.regional,
                solution: &r.solution,
            },
        )?;
        out.csv(
            &format!("{label}_breakdown"),
            &["category", "value"],
            breakdown_rows(&r.breakdown),
        )?;
        out.csv(
            &format!("{label}_plan"),
            &["from", "to", "capacity", "planned"],
            s.instance
                .links
                .iter()
                .zip(&r.solution.planned_interchange)
                .map(|(l, f)| vec![l.from.clone(), l.to.clone(), num(l.capacity), num(f.value)])
                .collect(),
        )?;
        summary.push(vec![
            label.to_string(),
            format!("{method:?}").to_lowercase(),
            num(objective),
            num(r.gap),
            r.iterations.to_string(),
            r.converged.to_string(),
        ]);
        if !r.converged {
            stalled.push(format!(
                "slice {label}: Benders stopped after {} iterations with relative gap {:e}",
                r.iterations, r.gap
            ));
        }
    }
    out.csv(
        "summary",
        &[
            "slice",
            "method",
            "objective",
            "gap",
            "iterations",
            "converged",
        ],
        summary,
    )?;
    finish(out)?;
    if stalled.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(stalled.join("\n")))
    }
}

fn evpi_rows(r: &EvpiReport) -> Vec<Vec<String>> {
    [
        ("rp", r.rp),
        ("ws", r.ws),
        ("ev", r.ev),
        ("eev", r.eev),
        ("evpi_standard", r.evpi_standard),
        ("evpi_paper", r.evpi_paper),
        ("vss", r.vss),
    ]
    .iter()
    .map(|(k, v)| vec![k.to_string(), num(*v)])
    .collect()
}

fn evpi_cmd(ctx: &Ctx) -> Result<(), CliError> {
    let (_, slices) = load(&ctx.cfg)?.require_valid()?;
    let (method, opts) = (ctx.method(), ctx.benders());
    let results = ctx.map_slices(&slices, |s| evpi(&s.instance, method, &opts));
    let mut out = ctx.output(Command::Evpi)?;
    let mut summary = Vec::new();
    for (s, r) in slices.iter().zip(results) {
        let r = r?;
        let label = s.label.as_str();
        say!(
            "slice={label} rp={:.6} ws={:.6} ev={:.6} eev={:.6} evpi={:.6} vss={:.6}",
            r.rp,
            r.ws,
            r.ev,
            r.eev,
            r.evpi_standard,
            r.vss
        );
        out.json(label, &r)?;
        out.csv(label, &["metric", "value"], evpi_rows(&r))?;
        out.csv(
            &format!("{label}_scenarios"),
            &["scenario", "probability", "objective"],
            r.per_scenario
                .iter()
                .map(|o| vec![o.scenario.clone(), num(o.probability), num(o.objective)])
                .collect(),
        )?;
        let mut row = vec![label.to_string()];
        row.extend(evpi_rows(&r).into_iter().map(|mut kv| kv.remove(1)));
        summary.push(row);
    }
    out.csv(
        "summary",
        &[
            "slice",
            "rp",
            "ws",
            "ev",
            "eev",
            "evpi_standard",
            "evpi_paper",
            "vss",
        ],
        summary,
    )?;
    finish(out)
}

fn sensitivity(ctx: &Ctx) -> Result<(), CliError> {
    let (_, slices) = load(&ctx.cfg)?.require_valid()?;
    let bopts = ctx.benders();
    let a = &ctx.cfg.analysis;
    let sopts = SensitivityOptions {
        delta: a.sensitivity_delta,
        fuel: a.sensitivity_fuel.clone(),
        method: ctx.method(),
    };
    let relax = a.transmission_relaxation;
    let results = ctx.map_slices(&slices, |s| -> Result<_, CliError> {
        let cap = capacity_sensitivity(&s.instance, &sopts, &bopts)?;
        let trans = match relax {
            true => Some(transmission_relaxation(&s.instance, sopts.method, &bopts)?),
            false => None,
        };
        Ok((cap, trans))
    });
    let mut out = ctx.output(Command::Sensitivity)?;
    for (s, r) in slices.iter().zip(results) {
        let (cap, trans) = r?;
        let label = s.label.as_str();
        for e in &cap {
            match e.saving {
                Some(saving) => say!(
                    "slice={label} region={} fuel={} saving={saving:.6}",
                    e.region,
                    e.fuel.as_deref().unwrap_or("-")
                ),
                None => say!("slice={label} region={} fuel=- saving=n/a", e.region),
            }
        }
        out.json(&format!("{label}_capacity"), &cap)?;
        out.csv(
            &format!("{label}_capacity"),
            &["region", "fuel", "baseline_cost", "expanded_cost", "saving"],
            cap.iter()
                .map(|e| {
                    vec![
                        e.region.clone(),
                        e.fuel.clone().unwrap_or_default(),
                        num(e.baseline_cost),
                        e.expanded_cost.map(num).unwrap_or_default(),
                        e.saving.map(num).unwrap_or_default(),
                    ]
                })
                .collect(),
        )?;
        if let Some(t) = trans {
            say!(
                "slice={label} transmission baseline={:.6} unlimited={:.6} saving={:.6}",
                t.baseline.total,
                t.unlimited.total,
                t.saving
            );
            out.json(&format!("{label}_transmission"), &t)?;
            out.csv(
                &format!("{label}_transmission"),
                &[
                    "from",
                    "to",
                    "capacity",
                    "baseline_plan",
                    "unlimited_plan",
                    "delta",
                ],
                t.per_link
                    .iter()
                    .map(|l| {
                        vec![
                            l.from.clone(),
                            l.to.clone(),
                            num(l.capacity),
                            num(l.baseline_plan),
                            num(l.unlimited_plan),
                            num(l.delta),
                        ]
                    })
                    .collect(),
            )?;
        }
    }
    finish(out)
}

#[derive(Serialize)]
struct SliceEvpi<'a> {
    slice: &'a str,
    report: &'a EvpiReport,
}

fn report(ctx: &Ctx) -> Result<(), CliError> {
    let (data, slices) = load(&ctx.cfg)?.require_valid()?;
    let year = data.as_ref().map(|d| d.year);
    let (method, opts) = (ctx.method(), ctx.benders());
    let want_evpi = ctx.cfg.analysis.evpi;
    let results = ctx.map_slices(&slices, |s| -> Result<_, CliError> {
        let solved = solve_instance(&s.instance, method, &opts)?;
        let regional = regional_breakdown(&s.instance, &solved.solution);
        let outcome = match (s.group, year) {
            (Some(g), Some(y)) => SliceOutcome::for_group(&g, y, solved.breakdown, regional),
            _ => SliceOutcome {
                slice: s.label.clone(),
                month: None,
                hour: None,
                hours: 1.0,
                breakdown: solved.breakdown,
                regional,
            },
        };
        let value = match want_evpi {
            true => Some(evpi(&s.instance, method, &opts)?),
            false => None,
        };
        Ok((outcome, value))
    });
    let mut outcomes = Vec::new();
    let mut values = Vec::new();
    for r in results {
        let (o, v) = r?;
        outcomes.push(o);
        values.extend(v);
    }
    let agg = aggregate_report(&outcomes)?;
    let mut out = ctx.output(Command::Report)?;
    out.json("aggregate", &agg)?;
    out.text("stats", "csv", &agg.stats_csv())?;
    out.text("slices", "csv", &agg.slices_csv())?;
    out.text("regional", "csv", &agg.regional_csv())?;
    if !agg.monthly.is_empty() {
        out.text("monthly", "csv", &agg.monthly_csv())?;
    }
    if !agg.hourly.is_empty() {
        out.text("hourly", "csv", &agg.hourly_csv())?;
    }
    if want_evpi {
        let per_slice: Vec<SliceEvpi> = outcomes
            .iter()
            .zip(&values)
            .map(|(o, r)| SliceEvpi {
                slice: &o.slice,
                report: r,
            })
            .collect();
        out.json("evpi", &per_slice)?;
        out.csv(
            "evpi",
            &[
                "slice",
                "rp",
                "ws",
                "ev",
                "eev",
                "evpi_standard",
                "evpi_paper",
                "vss",
            ],
            per_slice
                .iter()
                .map(|p| {
                    let mut row = vec![p.slice.to_string()];
                    row.extend(evpi_rows(p.report).into_iter().map(|mut kv| kv.remove(1)));
                    row
                })
                .collect(),
        )?;
    }
    for s in &outcomes {
        say!(
            "slice={} hours={} per_step_total={:.6}",
            s.slice,
            s.hours,
            s.breakdown.total
        );
    }
    say!("annual_total={:.6}", agg.annual.total);
    if !agg.monthly.is_empty() {
        let months: Vec<String> = agg
            .months_by_total()
            .iter()
            .map(|m| m.to_string())
            .collect();
        say!("months_by_total={}", months.join(","));
    }
    finish(out)
}
