use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FuelCategory, PlanningInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

fn nonneg(report: &mut ValidationReport, field: String, value: f64) {
    if !value.is_finite() || value < 0.0 {
        report.push(field, format!("must be finite and >= 0, got {value}"));
    }
}

/// Check every data invariant of the instance. Violations are returned as
/// data; an instance with an empty report compiles with
/// [`build_extensive_form`](super::build_extensive_form).
pub fn validate_instance(inst: &PlanningInstance) -> ValidationReport {
    let mut r = ValidationReport::default();

    if inst.regions.is_empty() {
        r.push("regions", "at least one region is required");
    }
    let regions: HashSet<&str> = inst.regions.iter().map(String::as_str).collect();
    if regions.len() != inst.regions.len() {
        r.push("regions", "region ids must be unique");
    }
    let mut fuel_ids = HashSet::new();
    for f in &inst.fuels {
        if !fuel_ids.insert(f.id.as_str()) {
            r.push(format!("fuels.{}", f.id), "duplicate fuel id");
        }
    }

    let mut variable_pairs = BTreeSet::new();
    let mut gen_keys = HashSet::new();
    for (idx, g) in inst.generators.iter().enumerate() {
        let field = format!("generators[{idx}]({},{})", g.region, g.fuel);
        if !regions.contains(g.region.as_str()) {
            r.push(&field, format!("unknown region {}", g.region));
        }
        let cat = inst.fuel_category(&g.fuel);
        match (cat, g.category) {
            (None, _) => r.push(&field, format!("unknown fuel {}", g.fuel)),
            (Some(c), Some(declared)) if c != declared => r.push(
                &field,
                format!("category {declared:?} disagrees with fuel category {c:?}"),
            ),
            _ => {}
        }
        if !gen_keys.insert((g.region.as_str(), g.fuel.as_str())) {
            r.push(
                &field,
                "more than one generator for this (region, fuel) pair",
            );
        }
        nonneg(&mut r, format!("{field}.rated_power"), g.rated_power);
        nonneg(
            &mut r,
            format!("{field}.available_power"),
            g.available_power,
        );
        nonneg(
            &mut r,
            format!("{field}.production_cost"),
            g.production_cost,
        );
        if g.available_power > g.rated_power {
            let which = match cat {
                Some(FuelCategory::Fixed) => {
                    "capacity limit (2) conflicts with the fixed-output equality (3)"
                }
                _ => "available power exceeds rated capacity (2)",
            };
            r.push(
                format!("{field}.available_power"),
                format!(
                    "{} > rated_power {}: {which}",
                    g.available_power, g.rated_power
                ),
            );
        }
        if cat == Some(FuelCategory::Variable) {
            variable_pairs.insert((g.region.clone(), g.fuel.clone()));
        }
    }

    let mut link_keys = HashSet::new();
    for l in &inst.links {
        let field = format!("links.{}", l.key());
        for end in [&l.from, &l.to] {
            if !regions.contains(end.as_str()) {
                r.push(&field, format!("unknown region {end}"));
            }
        }
        if l.from == l.to {
            r.push(&field, "self-links are not allowed");
        }
        if !link_keys.insert((l.from.as_str(), l.to.as_str())) {
            r.push(&field, "duplicate link for this ordered pair");
        }
        nonneg(&mut r, format!("{field}.capacity"), l.capacity);
        nonneg(&mut r, format!("{field}.transfer_cost"), l.transfer_cost);
        nonneg(
            &mut r,
            format!("{field}.deviation_penalty"),
            l.deviation_penalty,
        );
        if let Some(k) = inst.kappa_trans {
            if l.deviation_penalty != k * l.transfer_cost {
                r.push(
                    format!("{field}.deviation_penalty"),
                    "must equal kappa_trans * transfer_cost",
                );
            }
        }
    }
    if let Some(k) = inst.kappa_trans {
        nonneg(&mut r, "kappa_trans".into(), k);
    }
    nonneg(&mut r, "excess_cost".into(), inst.excess_cost);

    if inst.scenarios.is_empty() {
        r.push("scenarios", "at least one scenario is required");
    }
    let mut ids = HashSet::new();
    let mut total = 0.0;
    for s in &inst.scenarios {
        let field = format!("scenarios.{}", s.id);
        if !ids.insert(s.id.as_str()) {
            r.push(&field, "duplicate scenario id");
        }
        if !(s.probability.is_finite() && s.probability > 0.0 && s.probability <= 1.0) {
            r.push(
                format!("{field}.probability"),
                format!("must lie in (0, 1], got {}", s.probability),
            );
        }
        total += s.probability;
        let keys: BTreeSet<&str> = s.demand.keys().map(String::as_str).collect();
        let expected: BTreeSet<&str> = inst.regions.iter().map(String::as_str).collect();
        if keys != expected {
            r.push(
                format!("{field}.demand"),
                format!("keys {keys:?} must equal the region set {expected:?}"),
            );
        }
        for (region, &d) in &s.demand {
            nonneg(&mut r, format!("{field}.demand.{region}"), d);
        }
        let mut pairs = BTreeSet::new();
        for (region, fuels) in &s.vrrg_available {
            for (fuel, &v) in fuels {
                pairs.insert((region.clone(), fuel.clone()));
                nonneg(&mut r, format!("{field}.vrrg_available.{region}.{fuel}"), v);
            }
        }
        if pairs != variable_pairs {
            r.push(
                format!("{field}.vrrg_available"),
                format!(
                    "keys {pairs:?} must cover exactly the Variable generators {variable_pairs:?}"
                ),
            );
        }
    }
    if !inst.scenarios.is_empty() && (total - 1.0).abs() > 1e-9 {
        r.push(
            "scenarios",
            format!("probabilities sum to {total}, expected 1"),
        );
    }

    for region in &inst.regions {
        match inst.shortage_cost.get(region) {
            None => r.push(format!("shortage_cost.{region}"), "missing"),
            Some(&c) => nonneg(&mut r, format!("shortage_cost.{region}"), c),
        }
    }
    for region in inst.shortage_cost.keys() {
        if !regions.contains(region.as_str()) {
            r.push(format!("shortage_cost.{region}"), "unknown region");
        }
    }
    r
}
