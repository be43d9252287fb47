//! Seeded random planning instances and small hand-built ones for cross-checking solvers.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{
    Fuel, FuelCategory, GeneratorSpec, PlanningInstance, Scenario, TransmissionLink,
};

/// Size ranges (inclusive) for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct RandomShape {
    pub regions: (usize, usize),
    pub fuels: (usize, usize),
    pub scenarios: (usize, usize),
    pub link_probability: f64,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self {
            regions: (2, 5),
            fuels: (1, 4),
            scenarios: (2, 8),
            link_probability: 0.5,
        }
    }
}

pub fn random_instance(seed: u64, shape: &RandomShape) -> PlanningInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nr = rng.random_range(shape.regions.0..=shape.regions.1);
    let nf = rng.random_range(shape.fuels.0..=shape.fuels.1);
    let ns = rng.random_range(shape.scenarios.0..=shape.scenarios.1);

    let regions: Vec<String> = (0..nr).map(|i| format!("R{i}")).collect();
    let fuels: Vec<Fuel> = (0..nf)
        .map(|i| Fuel {
            id: format!("f{i}"),
            category: match rng.random_range(0..3) {
                0 => FuelCategory::Fixed,
                1 => FuelCategory::Dispatchable,
                _ => FuelCategory::Variable,
            },
        })
        .collect();

    let mut generators = Vec::new();
    for r in &regions {
        for f in &fuels {
            if rng.random_bool(0.7) {
                let rated: f64 = rng.random_range(10.0..120.0);
                let available = match f.category {
                    FuelCategory::Fixed => rated * rng.random_range(0.1..0.6),
                    FuelCategory::Dispatchable => rated * rng.random_range(0.5..1.0),
                    FuelCategory::Variable => rated,
                };
                generators.push(GeneratorSpec {
                    region: r.clone(),
                    fuel: f.id.clone(),
                    category: None,
                    rated_power: rated.round(),
                    available_power: available.round().min(rated.round()),
                    production_cost: rng.random_range(0.0..100.0_f64).round(),
                });
            }
        }
    }

    let mut links = Vec::new();
    for a in &regions {
        for b in &regions {
            if a != b && rng.random_bool(shape.link_probability) {
                links.push(TransmissionLink {
                    from: a.clone(),
                    to: b.clone(),
                    capacity: rng.random_range(0.0..80.0_f64).round(),
                    transfer_cost: rng.random_range(1.0..20.0_f64).round(),
                    deviation_penalty: rng.random_range(0.0..15.0_f64).round(),
                });
            }
        }
    }

    let weights: Vec<f64> = (0..ns).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = probs[..ns - 1].iter().sum();
    probs[ns - 1] = 1.0 - head;

    let scenarios = (0..ns)
        .map(|s| {
            let demand = regions
                .iter()
                .map(|r| (r.clone(), rng.random_range(0.0..150.0_f64).round()))
                .collect();
            let mut vrrg: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
            for g in &generators {
                let cat = fuels.iter().find(|f| f.id == g.fuel).map(|f| f.category);
                if cat == Some(FuelCategory::Variable) {
                    vrrg.entry(g.region.clone()).or_default().insert(
                        g.fuel.clone(),
                        (g.rated_power * rng.random_range(0.0..1.0)).round(),
                    );
                }
            }
            Scenario {
                id: format!("s{}", s + 1),
                probability: probs[s],
                demand,
                vrrg_available: vrrg,
            }
        })
        .collect();

    let shortage_cost = regions
        .iter()
        .map(|r| (r.clone(), rng.random_range(300.0..2000.0_f64).round()))
        .collect();

    PlanningInstance {
        regions,
        fuels,
        generators,
        links,
        scenarios,
        shortage_cost,
        kappa_trans: None,
        excess_cost: 0.0,
    }
}

/// `per` points around each centre with isotropic Gaussian noise of standard deviation `sd`.
pub fn gaussian_blobs(seed: u64, centres: &[Vec<f64>], per: usize, sd: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd.max(0.0)).expect("finite deviation");
    centres
        .iter()
        .flat_map(|c| std::iter::repeat_n(c, per))
        .map(|c| c.iter().map(|v| v + noise.sample(&mut rng)).collect())
        .collect()
}

fn gas(region: &str, capacity: f64, cost: f64) -> GeneratorSpec {
    GeneratorSpec {
        region: region.into(),
        fuel: "gas".into(),
        category: None,
        rated_power: capacity,
        available_power: capacity,
        production_cost: cost,
    }
}

fn demand_scenario(id: &str, probability: f64, demand: &[(&str, f64)]) -> Scenario {
    Scenario {
        id: id.into(),
        probability,
        demand: demand.iter().map(|(r, d)| (r.to_string(), *d)).collect(),
        vrrg_available: BTreeMap::new(),
    }
}

fn gas_only() -> Vec<Fuel> {
    vec![Fuel {
        id: "gas".into(),
        category: FuelCategory::Dispatchable,
    }]
}

fn uniform_shortage(regions: &[String], cost: f64) -> BTreeMap<String, f64> {
    regions.iter().map(|r| (r.clone(), cost)).collect()
}

/// Two regions, gas at A only, one A->B link, two demand scenarios at B.
/// The stochastic optimum plans 50 on the link at expected cost 4550.
pub fn t1() -> PlanningInstance {
    let regions = vec!["A".to_string(), "B".to_string()];
    PlanningInstance {
        shortage_cost: uniform_shortage(&regions, 1000.0),
        regions,
        fuels: gas_only(),
        generators: vec![gas("A", 100.0, 50.0)],
        links: vec![TransmissionLink {
            from: "A".into(),
            to: "B".into(),
            capacity: 60.0,
            transfer_cost: 10.0,
            deviation_penalty: 5.0,
        }],
        scenarios: vec![
            demand_scenario("s1", 0.5, &[("A", 40.0), ("B", 30.0)]),
            demand_scenario("s2", 0.5, &[("A", 40.0), ("B", 50.0)]),
        ],
        kappa_trans: None,
        excess_cost: 0.0,
    }
}

/// Three regions on a weak line; C is short of capacity in both scenarios.
pub fn shortage_stricken() -> PlanningInstance {
    let regions = vec!["A".to_string(), "B".to_string(), "C".to_string()];
    PlanningInstance {
        shortage_cost: uniform_shortage(&regions, crate::ingest::WOO2021_SHORTAGE_COST),
        regions,
        fuels: gas_only(),
        generators: vec![
            gas("A", 150.0, 40.0),
            gas("B", 120.0, 45.0),
            gas("C", 50.0, 60.0),
        ],
        links: vec![
            TransmissionLink::with_kappa("A", "B", 20.0, 5.0, 0.5),
            TransmissionLink::with_kappa("B", "C", 10.0, 5.0, 0.5),
        ],
        scenarios: vec![
            demand_scenario("s1", 0.6, &[("A", 100.0), ("B", 90.0), ("C", 90.0)]),
            demand_scenario("s2", 0.4, &[("A", 110.0), ("B", 100.0), ("C", 120.0)]),
        ],
        kappa_trans: Some(0.5),
        excess_cost: 0.0,
    }
}

/// Cheap power at A behind a binding link to shortage-prone B.
pub fn binding_link() -> PlanningInstance {
    let regions = vec!["A".to_string(), "B".to_string()];
    PlanningInstance {
        shortage_cost: uniform_shortage(&regions, 5000.0),
        regions,
        fuels: gas_only(),
        generators: vec![gas("A", 300.0, 30.0), gas("B", 40.0, 80.0)],
        links: vec![TransmissionLink::with_kappa("A", "B", 25.0, 4.0, 0.5)],
        scenarios: vec![
            demand_scenario("s1", 0.5, &[("A", 50.0), ("B", 90.0)]),
            demand_scenario("s2", 0.5, &[("A", 60.0), ("B", 110.0)]),
        ],
        kappa_trans: Some(0.5),
        excess_cost: 0.0,
    }
}
