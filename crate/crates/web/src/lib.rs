//! WebAssembly entry points for the browser demo. Inputs and outputs are JSON text.

use gridplan_core::analysis::{evpi, SolveMethod};
use gridplan_core::benders::{evaluate_plan, run_benders, BendersOptions};
use gridplan_core::model::{validate_instance, PlanningInstance};
use gridplan_core::scenario::{elbow_from_profile, kmeans, wcss_profile, KMeansOptions};
use gridplan_core::synthetic;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_STEPS: usize = 400;
const MAX_POINTS: usize = 5000;

fn parse_instance(text: &str) -> Result<PlanningInstance, String> {
    let inst = PlanningInstance::from_json(text).map_err(|e| format!("bad instance: {e}"))?;
    let report = validate_instance(&inst);
    if !report.is_ok() {
        return Err(format!("instance failed validation:\n{report}"));
    }
    Ok(inst)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo values serialize")
}

#[derive(Serialize)]
struct CutLine {
    iteration: usize,
    /// Cut value at plan 0 on the chosen link, other links at the optimum.
    intercept: f64,
    slope: f64,
}

#[derive(Serialize)]
struct Bounds {
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct RecourseCurve {
    link: String,
    capacity: f64,
    plan: Vec<f64>,
    recourse: Vec<f64>,
    total: Vec<f64>,
    cuts: Vec<CutLine>,
    optimal_plan: f64,
    objective: f64,
    bounds: Vec<Bounds>,
}

/// Expected recourse along one link's plan, with the Benders cuts that approximate it.
pub fn recourse_curve(instance: &str, link: usize, steps: usize) -> Result<String, String> {
    let inst = parse_instance(instance)?;
    let l = inst.links.get(link).ok_or_else(|| {
        format!(
            "link {link} does not exist; the instance has {}",
            inst.links.len()
        )
    })?;
    let steps = steps.clamp(2, MAX_STEPS);
    let report = run_benders(&inst, &BendersOptions::default()).map_err(|e| e.to_string())?;
    let optimum = report.final_solution.plan_vector();
    let lp = BendersOptions::default().lp;

    let mut plan = Vec::with_capacity(steps + 1);
    let mut recourse = Vec::with_capacity(steps + 1);
    let mut total = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let x = l.capacity * i as f64 / steps as f64;
        let mut p = optimum.clone();
        p[link] = x;
        let (t, _) = evaluate_plan(&inst, &p, &lp).map_err(|e| e.to_string())?;
        plan.push(x);
        recourse.push(t - inst.first_stage_cost(&p));
        total.push(t);
    }
    let mut at_zero = optimum.clone();
    at_zero[link] = 0.0;
    let cuts = report
        .iterations
        .iter()
        .map(|it| CutLine {
            iteration: it.iteration,
            intercept: it.cut.value_at(&at_zero),
            slope: it.cut.gradient[link],
        })
        .collect();
    Ok(to_json(&RecourseCurve {
        link: l.key(),
        capacity: l.capacity,
        plan,
        recourse,
        total,
        cuts,
        optimal_plan: optimum[link],
        objective: report.objective,
        bounds: report
            .iterations
            .iter()
            .map(|it| Bounds {
                lower: it.lower_bound,
                upper: it.best_upper_bound,
            })
            .collect(),
    }))
}

#[derive(Serialize)]
struct ClusterResult {
    k: usize,
    profile: Vec<f64>,
    centroids: Vec<Vec<f64>>,
    assignment: Vec<usize>,
    weights: Vec<f64>,
}

/// k-means on `points` with k from the elbow rule over 1..=k_max.
pub fn cluster(points: &str, k_max: usize, seed: u64) -> Result<String, String> {
    let pts: Vec<Vec<f64>> =
        serde_json::from_str(points).map_err(|e| format!("bad points: {e}"))?;
    if pts.is_empty() || pts.len() > MAX_POINTS {
        return Err(format!(
            "need between 1 and {MAX_POINTS} points, got {}",
            pts.len()
        ));
    }
    let opts = KMeansOptions {
        seed,
        ..Default::default()
    };
    let k_max = k_max.clamp(3, 10).min(pts.len());
    let profile = wcss_profile(&pts, k_max, &opts).map_err(|e| e.to_string())?;
    let k = elbow_from_profile(&profile);
    let c = kmeans(&pts, k, &opts).map_err(|e| e.to_string())?;
    Ok(to_json(&ClusterResult {
        k,
        profile,
        centroids: c.centroids,
        assignment: c.assignment,
        weights: c.weights,
    }))
}

/// Noisy 2-D points around `clusters` centres spread over a 100 x 100 square.
pub fn sample_points(seed: u64, clusters: usize, per: usize) -> String {
    let clusters = clusters.clamp(1, 8);
    let per = per.clamp(1, MAX_POINTS / clusters);
    let centres: Vec<Vec<f64>> = (0..clusters)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / clusters as f64 + seed as f64;
            vec![50.0 + 35.0 * a.cos(), 50.0 + 35.0 * a.sin()]
        })
        .collect();
    to_json(&synthetic::gaussian_blobs(seed, &centres, per, 6.0))
}

/// Recourse, wait-and-see and mean-value chain.
pub fn evpi_chain(instance: &str) -> Result<String, String> {
    let inst = parse_instance(instance)?;
    let r =
        evpi(&inst, SolveMethod::Benders, &BendersOptions::default()).map_err(|e| e.to_string())?;
    Ok(to_json(&r))
}

pub fn t1_instance() -> String {
    synthetic::t1().to_json()
}

#[wasm_bindgen(js_name = recourseCurve)]
pub fn recourse_curve_js(instance: &str, link: usize, steps: usize) -> Result<String, JsValue> {
    recourse_curve(instance, link, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = cluster)]
pub fn cluster_js(points: &str, k_max: usize, seed: u32) -> Result<String, JsValue> {
    cluster(points, k_max, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = samplePoints)]
pub fn sample_points_js(seed: u32, clusters: usize, per: usize) -> String {
    sample_points(seed as u64, clusters, per)
}

#[wasm_bindgen(js_name = evpiChain)]
pub fn evpi_chain_js(instance: &str) -> Result<String, JsValue> {
    evpi_chain(instance).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = t1Instance)]
pub fn t1_instance_js() -> String {
    t1_instance()
}
