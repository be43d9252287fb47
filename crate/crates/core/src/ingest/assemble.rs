use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    estimate_fixed_output, estimate_generator_capacity, estimate_transmission_capacity, CostConfig,
    Dataset, FixedOutput, IngestError, Series, Window,
};
use crate::model::{
    link_key, validate_instance, Fuel, FuelCategory, GeneratorSpec, PlanningInstance, Scenario,
    TransmissionLink,
};
use crate::scenario::{demand_column, vrrg_column, GroupKey, ObservationMatrix, ScenarioBuild};

/// Everything of an instance except its scenarios, estimated from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTemplate {
    pub regions: Vec<String>,
    pub fuels: Vec<Fuel>,
    pub generators: Vec<GeneratorSpec>,
    pub links: Vec<TransmissionLink>,
    pub shortage_cost: BTreeMap<String, f64>,
    pub kappa_trans: f64,
    pub excess_cost: f64,
    /// Series skipped for lack of data or non-positive capacity.
    pub warnings: Vec<String>,
}

impl InstanceTemplate {
    /// Estimate capacities over `window` and attach costs from `config`.
    ///
    /// Every missing cost or category is collected and reported together.
    pub fn from_data(
        ds: &Dataset,
        config: &CostConfig,
        window: &Window,
    ) -> Result<Self, IngestError> {
        let regions = ds.regions();
        let region_set: BTreeSet<&String> = regions.iter().collect();
        let caps = estimate_generator_capacity(ds, window);
        let means = estimate_fixed_output(ds, window);
        let trans = estimate_transmission_capacity(ds, window);
        let mut gaps = Vec::new();
        let mut warnings = ds.window_warnings(window);

        let mut fuels: BTreeMap<String, FuelCategory> = BTreeMap::new();
        let mut generators = Vec::new();
        for ((region, fuel), &cap) in &caps {
            if !region_set.contains(region) {
                warnings.push(format!(
                    "{region} {fuel}: region has no demand series, generator ignored"
                ));
                continue;
            }
            if cap <= 0.0 {
                warnings.push(format!(
                    "{region} {fuel}: no positive output in window, generator ignored"
                ));
                continue;
            }
            let Some(&category) = config.fuel_categories.get(fuel) else {
                gaps.push(format!("fuel_categories: no category for fuel {fuel:?}"));
                continue;
            };
            let Some(&cost) = config.production_cost.get(fuel) else {
                gaps.push(format!("production_cost: no cost for fuel {fuel:?}"));
                continue;
            };
            let available = match category {
                FuelCategory::Fixed => match config.fixed_output {
                    FixedOutput::Mean => means[&(region.clone(), fuel.clone())].clamp(0.0, cap),
                    FixedOutput::Max => cap,
                },
                FuelCategory::Dispatchable | FuelCategory::Variable => cap,
            };
            fuels.insert(fuel.clone(), category);
            generators.push(GeneratorSpec {
                region: region.clone(),
                fuel: fuel.clone(),
                category: None,
                rated_power: cap,
                available_power: available,
                production_cost: cost,
            });
        }

        let mut links = Vec::new();
        for ((from, to), &cap) in &trans {
            if !region_set.contains(from) || !region_set.contains(to) {
                warnings.push(format!(
                    "{from}>{to}: endpoint has no demand series, link ignored"
                ));
                continue;
            }
            let key = link_key(from, to);
            match config.transmission_cost.for_link(&key) {
                Some(cost) => links.push(TransmissionLink::with_kappa(
                    from,
                    to,
                    cap,
                    cost,
                    config.kappa_trans,
                )),
                None => gaps.push(format!("transmission_cost: no cost for link {key:?}")),
            }
        }

        let mut shortage_cost = BTreeMap::new();
        for r in &regions {
            match config.shortage_cost.for_region(r)? {
                Some(c) => {
                    shortage_cost.insert(r.clone(), c);
                }
                None => gaps.push(format!("shortage_cost: no cost for region {r:?}")),
            }
        }

        if regions.is_empty() {
            gaps.push("dataset has no demand series".into());
        }
        gaps.sort();
        gaps.dedup();
        if !gaps.is_empty() {
            return Err(IngestError::Gaps(gaps));
        }
        Ok(Self {
            regions,
            fuels: fuels
                .into_iter()
                .map(|(id, category)| Fuel { id, category })
                .collect(),
            generators,
            links,
            shortage_cost,
            kappa_trans: config.kappa_trans,
            excess_cost: config.excess_cost,
            warnings,
        })
    }

    fn category(&self, fuel: &str) -> Option<FuelCategory> {
        self.fuels.iter().find(|f| f.id == fuel).map(|f| f.category)
    }

    fn variable_generators(&self) -> impl Iterator<Item = &GeneratorSpec> {
        self.generators
            .iter()
            .filter(|g| self.category(&g.fuel) == Some(FuelCategory::Variable))
    }

    /// Uncertain dimensions: demand per region, then availability per Variable generator.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.regions.iter().map(|r| demand_column(r)).collect();
        cols.extend(
            self.variable_generators()
                .map(|g| vrrg_column(&g.region, &g.fuel)),
        );
        cols
    }

    /// Hourly history of the uncertain dimensions. Hours missing any column are
    /// dropped and counted; negative readings are clamped to zero.
    pub fn observation_matrix(
        &self,
        ds: &Dataset,
    ) -> Result<(ObservationMatrix, usize), IngestError> {
        let mut sources: Vec<&BTreeMap<DateTime<Utc>, f64>> = Vec::new();
        for r in &self.regions {
            sources.push(ds.get(r, &Series::Demand).expect("region has demand"));
        }
        for g in self.variable_generators() {
            sources.push(
                ds.get(&g.region, &Series::NetGeneration(g.fuel.clone()))
                    .expect("generator estimated from this series"),
            );
        }
        let hours: BTreeSet<DateTime<Utc>> =
            sources.iter().flat_map(|s| s.keys().copied()).collect();
        let mut timestamps = Vec::new();
        let mut rows = Vec::new();
        let mut dropped = 0;
        for t in hours {
            let row: Option<Vec<f64>> = sources
                .iter()
                .map(|s| s.get(&t).map(|v| v.max(0.0)))
                .collect();
            match row {
                Some(row) => {
                    timestamps.push(t);
                    rows.push(row);
                }
                None => dropped += 1,
            }
        }
        Ok((
            ObservationMatrix::new(self.columns(), timestamps, rows)?,
            dropped,
        ))
    }

    /// Complete the template with a scenario set and validate the result.
    ///
    /// Availability is capped at rated power and demand floored at zero.
    pub fn instantiate(&self, scenarios: &[Scenario]) -> Result<PlanningInstance, IngestError> {
        if scenarios.is_empty() {
            return Err(IngestError::NoScenarios("(empty set)".into()));
        }
        let scenarios = scenarios
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.demand.values_mut().for_each(|d| *d = d.max(0.0));
                for g in self.variable_generators() {
                    if let Some(v) = s
                        .vrrg_available
                        .get_mut(&g.region)
                        .and_then(|m| m.get_mut(&g.fuel))
                    {
                        *v = v.clamp(0.0, g.rated_power);
                    }
                }
                s
            })
            .collect();
        let inst = PlanningInstance {
            regions: self.regions.clone(),
            fuels: self.fuels.clone(),
            generators: self.generators.clone(),
            links: self.links.clone(),
            scenarios,
            shortage_cost: self.shortage_cost.clone(),
            kappa_trans: Some(self.kappa_trans),
            excess_cost: self.excess_cost,
        };
        let report = validate_instance(&inst);
        if !report.is_ok() {
            return Err(IngestError::Invalid(report));
        }
        Ok(inst)
    }
}

/// Build the instance for one slice from data, costs and clustered scenarios.
pub fn assemble_instance(
    ds: &Dataset,
    config: &CostConfig,
    build: &ScenarioBuild,
    slice: &GroupKey,
    window: &Window,
) -> Result<PlanningInstance, IngestError> {
    let template = InstanceTemplate::from_data(ds, config, window)?;
    match build.sets.get(slice) {
        Some(set) if !set.scenarios.is_empty() => template.instantiate(&set.scenarios),
        _ => Err(IngestError::NoScenarios(slice.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SeriesKey;
    use crate::scenario::{build_scenarios, BuildOptions, KPolicy};
    use chrono::{Duration, TimeZone};

    fn small_dataset() -> Dataset {
        let mut ds = Dataset::default();
        let t0 = Utc.with_ymd_and_hms(2021, 7, 1, 0, 0, 0).unwrap();
        for h in 0..48 {
            let t = t0 + Duration::hours(h);
            let x = h as f64;
            ds.insert(SeriesKey::new("A", Series::Demand), t, 40.0 + (x % 5.0));
            ds.insert(SeriesKey::new("B", Series::Demand), t, 30.0 + (x % 7.0));
            ds.insert(
                SeriesKey::new("A", Series::NetGeneration("gas".into())),
                t,
                60.0 + (x % 3.0),
            );
            ds.insert(
                SeriesKey::new("A", Series::NetGeneration("nuclear".into())),
                t,
                10.0 + (x % 2.0),
            );
            ds.insert(
                SeriesKey::new("B", Series::NetGeneration("solar".into())),
                t,
                (x % 24.0 - 12.0).max(-1.0),
            );
            ds.insert(
                SeriesKey::new("A", Series::Interchange("B".into())),
                t,
                20.0 - (x % 4.0) * 8.0,
            );
        }
        ds
    }

    fn config() -> CostConfig {
        CostConfig::from_json(
            r#"{
                "production_cost": {"gas": 50, "nuclear": 30, "solar": 0},
                "shortage_cost": "woo2021",
                "transmission_cost": {"A>B": 10, "B>A": 8},
                "kappa_trans": 0.5,
                "fuel_categories": {"gas": "dispatchable", "nuclear": "fixed", "solar": "variable"}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn template_from_data() {
        let ds = small_dataset();
        let w = Window::trailing_year(&ds).unwrap();
        let t = InstanceTemplate::from_data(&ds, &config(), &w).unwrap();
        assert_eq!(t.regions, vec!["A", "B"]);
        let nuc = t.generators.iter().find(|g| g.fuel == "nuclear").unwrap();
        assert_eq!(nuc.rated_power, 11.0);
        assert_eq!(nuc.available_power, 10.5);
        let ab = t.links.iter().find(|l| l.key() == "A>B").unwrap();
        assert_eq!(ab.capacity, 20.0);
        assert_eq!(ab.deviation_penalty, 5.0);
        let ba = t.links.iter().find(|l| l.key() == "B>A").unwrap();
        assert_eq!(ba.capacity, 4.0);
        assert_eq!(t.shortage_cost["B"], 10370.0);
        assert_eq!(t.columns(), vec!["demand:A", "demand:B", "vrrg:B:solar"]);
    }

    #[test]
    fn gaps_are_listed_together() {
        let ds = small_dataset();
        let mut c = config();
        c.production_cost.remove("gas");
        c.fuel_categories.remove("solar");
        c.transmission_cost = crate::ingest::TransmissionCost::PerLink(BTreeMap::new());
        let err =
            InstanceTemplate::from_data(&ds, &c, &Window::trailing_year(&ds).unwrap()).unwrap_err();
        let IngestError::Gaps(gaps) = err else {
            panic!("{err}")
        };
        assert_eq!(gaps.len(), 4, "{gaps:?}");
    }

    #[test]
    fn assemble_and_round_trip() {
        let ds = small_dataset();
        let w = Window::trailing_year(&ds).unwrap();
        let t = InstanceTemplate::from_data(&ds, &config(), &w).unwrap();
        let (m, dropped) = t.observation_matrix(&ds).unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(m.len(), 48);
        let build = build_scenarios(
            &m,
            &BuildOptions {
                k_policy: KPolicy::Fixed(3),
                ..Default::default()
            },
        )
        .unwrap();
        let slice = GroupKey {
            month: 7,
            hour: None,
        };
        let inst = assemble_instance(&ds, &config(), &build, &slice, &w).unwrap();
        assert_eq!(inst.scenarios.len(), 3);
        let back = PlanningInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);

        let missing = GroupKey {
            month: 1,
            hour: None,
        };
        let err = assemble_instance(&ds, &config(), &build, &missing, &w).unwrap_err();
        assert_eq!(err.to_string(), "no scenarios for slice m01");
    }
}
