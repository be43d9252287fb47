//! Seeded synthetic year of hourly data on a 13-region, 8-fuel grid.
//!
//! Demand carries a daily cycle and a summer bump centred on August 1st, so
//! July and August are the most expensive months. Every number here is
//! synthetic; the costs in [`cost_config`] are placeholders of realistic size.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use chrono::{Datelike, Duration, TimeZone, Timelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{CostConfig, Dataset, Series, SeriesKey};

pub const REGIONS: [&str; 13] = [
    "CAL", "CAR", "CENT", "FLA", "MIDA", "MIDW", "NE", "NW", "NY", "SE", "SW", "TEN", "TEX",
];

pub const FUELS: [&str; 8] = [
    "coal", "gas", "hydro", "nuclear", "oil", "other", "solar", "wind",
];

/// Undirected interchange topology; each pair reports from the first region's side.
pub const CONNECTIONS: [(&str, &str); 20] = [
    ("CAL", "NW"),
    ("CAL", "SW"),
    ("NW", "SW"),
    ("CENT", "NW"),
    ("CENT", "SW"),
    ("SW", "TEX"),
    ("CENT", "TEX"),
    ("CENT", "MIDW"),
    ("MIDW", "TEX"),
    ("MIDA", "MIDW"),
    ("MIDW", "TEN"),
    ("MIDW", "SE"),
    ("MIDA", "NY"),
    ("CAR", "MIDA"),
    ("MIDA", "TEN"),
    ("NE", "NY"),
    ("CAR", "SE"),
    ("CAR", "TEN"),
    ("SE", "TEN"),
    ("FLA", "SE"),
];

/// Day of year (1-based) at the peak of the summer bump.
pub const SUMMER_PEAK_DAY: f64 = 213.0;
pub const SUMMER_WIDTH_DAYS: f64 = 30.0;

pub fn category(fuel: &str) -> &'static str {
    match fuel {
        "nuclear" => "fixed",
        "hydro" | "solar" | "wind" => "variable",
        _ => "dispatchable",
    }
}

/// Cost configuration matching the fixture; link costs are synthetic.
pub fn cost_config() -> CostConfig {
    let production: BTreeMap<&str, f64> = [
        ("coal", 88.0),
        ("gas", 71.0),
        ("hydro", 68.0),
        ("nuclear", 69.0),
        ("oil", 130.0),
        ("other", 95.0),
        ("solar", 43.0),
        ("wind", 50.0),
    ]
    .into();
    let mut transmission = serde_json::Map::new();
    for (i, (a, b)) in CONNECTIONS.iter().enumerate() {
        let cost = 6.0 + (i % 5) as f64 * 1.5;
        transmission.insert(format!("{a}>{b}"), cost.into());
        transmission.insert(format!("{b}>{a}"), cost.into());
    }
    let categories: serde_json::Map<String, serde_json::Value> = FUELS
        .iter()
        .map(|f| (f.to_string(), category(f).into()))
        .collect();
    let doc = serde_json::json!({
        "production_cost": production,
        "shortage_cost": "woo2021",
        "transmission_cost": transmission,
        "kappa_trans": 0.5,
        "fuel_categories": categories,
    });
    CostConfig::from_json(&doc.to_string()).expect("fixture config is well formed")
}

struct RegionProfile {
    base_demand: f64,
    fuels: Vec<(&'static str, f64)>,
}

fn profile(rng: &mut ChaCha8Rng) -> RegionProfile {
    let base_demand = rng.random_range(8_000.0..40_000.0_f64).round();
    let mut fuels = Vec::new();
    for fuel in FUELS {
        let share: f64 = match fuel {
            "gas" => rng.random_range(0.35..0.55),
            "nuclear" if rng.random_bool(0.6) => rng.random_range(0.1..0.25),
            "coal" if rng.random_bool(0.7) => rng.random_range(0.1..0.3),
            "oil" if rng.random_bool(0.5) => rng.random_range(0.02..0.06),
            "other" => rng.random_range(0.02..0.05),
            "hydro" if rng.random_bool(0.6) => rng.random_range(0.05..0.2),
            "solar" if rng.random_bool(0.8) => rng.random_range(0.05..0.2),
            "wind" if rng.random_bool(0.8) => rng.random_range(0.05..0.25),
            _ => 0.0,
        };
        if share > 0.0 {
            fuels.push((fuel, (share * base_demand).round()));
        }
    }
    RegionProfile { base_demand, fuels }
}

/// Summer multiplier on demand for a day of the year.
pub fn summer_factor(day_of_year: f64) -> f64 {
    let z = (day_of_year - SUMMER_PEAK_DAY) / SUMMER_WIDTH_DAYS;
    1.0 + 0.35 * (-0.5 * z * z).exp()
}

/// One year (8760 hours of 2021) of demand, net generation and interchange.
pub fn synthetic_year(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<RegionProfile> = REGIONS.iter().map(|_| profile(&mut rng)).collect();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let start = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
    let mut ds = Dataset::default();
    let mut wind_state = vec![0.5; REGIONS.len()];
    let mut flow_state = vec![0.0; CONNECTIONS.len()];

    for h in 0..8760 {
        let t = start + Duration::hours(h);
        let day = t.ordinal() as f64;
        let hour = t.hour() as f64;
        let daily = 1.0 + 0.12 * ((hour - 11.0) / 24.0 * TAU).sin();
        let seasonal = summer_factor(day);
        let sun = ((hour - 6.0) / 12.0 * std::f64::consts::PI).sin().max(0.0)
            * (0.75 + 0.25 * ((day - 80.0) / 365.0 * TAU).sin());
        for (r, (region, p)) in REGIONS.iter().zip(&profiles).enumerate() {
            let demand = p.base_demand * seasonal * daily * (1.0 + 0.03 * noise.sample(&mut rng));
            ds.insert(SeriesKey::new(region, Series::Demand), t, demand.round());
            wind_state[r] =
                (0.9 * wind_state[r] + 0.1 * rng.random_range(0.0..1.0_f64)).clamp(0.0, 1.0);
            for &(fuel, cap) in &p.fuels {
                let output = match fuel {
                    "nuclear" => cap * (0.92 + 0.02 * noise.sample(&mut rng)).min(1.0),
                    "solar" => cap * sun * rng.random_range(0.6..1.0),
                    "wind" => cap * wind_state[r],
                    "hydro" => {
                        cap * (0.55 + 0.3 * ((day - 60.0) / 365.0 * TAU).sin())
                            * rng.random_range(0.85..1.0)
                    }
                    _ => {
                        cap * (0.4
                            + 0.5 * (seasonal - 1.0) / 0.35 * 0.5
                            + 0.3 * (daily - 0.88) / 0.24)
                            .clamp(0.05, 1.0)
                            * rng.random_range(0.9..1.0)
                    }
                };
                ds.insert(
                    SeriesKey::new(region, Series::NetGeneration(fuel.to_string())),
                    t,
                    output.max(0.0).round(),
                );
            }
        }
        for (i, (a, b)) in CONNECTIONS.iter().enumerate() {
            flow_state[i] = 0.95 * flow_state[i] + 0.05 * noise.sample(&mut rng);
            let scale = 400.0 + 150.0 * (i % 7) as f64;
            ds.insert(
                SeriesKey::new(a, Series::Interchange(b.to_string())),
                t,
                (scale * 3.0 * flow_state[i]).round(),
            );
        }
    }
    ds
}
