use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use chrono::{Datelike, Duration};
use gridplan_core::ingest::{
    parse_hourly_csv, CostConfig, Dataset, IngestError, InstanceTemplate, Window,
};
use gridplan_core::model::{validate_instance, PlanningInstance};
use gridplan_core::scenario::{build_scenarios, GroupKey, ScenarioBuild};

use crate::config::{InstanceEntry, RunConfig, ScenarioPolicy, Source};
use crate::CliError;

/// Clustered data behind a data run.
pub struct DataContext {
    pub template: InstanceTemplate,
    pub build: ScenarioBuild,
    pub columns: Vec<String>,
    pub rejected_records: usize,
    pub dropped_hours: usize,
    pub warnings: Vec<String>,
    pub year: i32,
}

/// One planning problem to run, or the reason it cannot be built.
pub struct SliceInput {
    pub label: String,
    pub group: Option<GroupKey>,
    pub instance: Result<PlanningInstance, String>,
}

pub struct Loaded {
    pub data: Option<DataContext>,
    pub slices: Vec<SliceInput>,
}

pub struct Slice {
    pub label: String,
    pub group: Option<GroupKey>,
    pub instance: PlanningInstance,
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {what} {}: {e}", path.display())))
}

fn scenario_names(inst: &PlanningInstance) -> String {
    let ids: Vec<&str> = inst.scenarios.iter().map(|s| s.id.as_str()).collect();
    format!("[{}]", ids.join(", "))
}

fn load_instance(entry: &InstanceEntry) -> Result<SliceInput, CliError> {
    let text = read_text(&entry.path, "instance")?;
    let instance = match PlanningInstance::from_json(&text) {
        Err(e) => Err(format!("cannot parse {}: {e}", entry.path.display())),
        Ok(inst) => {
            let report = validate_instance(&inst);
            if report.is_ok() {
                Ok(inst)
            } else {
                Err(format!(
                    "scenario set {} failed validation:\n{report}",
                    scenario_names(&inst)
                ))
            }
        }
    };
    Ok(SliceInput {
        label: entry.slice.clone(),
        group: None,
        instance,
    })
}

fn load_data(
    cfg: &RunConfig,
    files: &[std::path::PathBuf],
    costs: &Path,
    policy: &ScenarioPolicy,
) -> Result<DataContext, CliError> {
    let costs = CostConfig::from_json(&read_text(costs, "cost config")?)?;
    let mut ds = Dataset::default();
    let mut warnings = Vec::new();
    let mut rejected_records = 0;
    for path in files {
        let file = File::open(path)
            .map_err(|e| CliError::Io(format!("cannot read data {}: {e}", path.display())))?;
        let outcome = parse_hourly_csv(BufReader::new(file), &costs.column_map)?;
        rejected_records += outcome.rejects.len();
        if let Some(first) = outcome.rejects.first() {
            warnings.push(format!(
                "{}: {} records rejected, first at line {} ({}: {})",
                path.display(),
                outcome.rejects.len(),
                first.row,
                first.reason,
                first.detail
            ));
        }
        let dups = ds.merge(outcome.dataset);
        if !dups.is_empty() {
            warnings.push(format!(
                "{}: {} records repeat earlier files and were ignored",
                path.display(),
                dups.len()
            ));
        }
    }
    let end = ds
        .last_timestamp()
        .ok_or_else(|| CliError::Invalid("data files contain no usable records".into()))?;
    let window = Window {
        end,
        length: Duration::days(cfg.window_days.unwrap_or(365)),
    };
    warnings.extend(ds.window_warnings(&window));
    let template = InstanceTemplate::from_data(&ds, &costs, &window)?;
    warnings.extend(template.warnings.iter().cloned());
    let (matrix, dropped_hours) = template.observation_matrix(&ds)?;
    let build = build_scenarios(&matrix, &policy.build_options()).map_err(IngestError::from)?;
    Ok(DataContext {
        columns: template.columns(),
        template,
        build,
        rejected_records,
        dropped_hours,
        warnings,
        year: cfg.year.unwrap_or(end.year()),
    })
}

fn data_slices(cfg: &RunConfig, data: &DataContext) -> Result<Vec<SliceInput>, CliError> {
    let keys: Vec<GroupKey> = match &cfg.slices {
        None => data.build.sets.keys().copied().collect(),
        Some(labels) => {
            let known: Vec<GroupKey> = data
                .build
                .sets
                .keys()
                .copied()
                .chain(data.build.skipped.iter().map(|s| s.group))
                .collect();
            labels
                .iter()
                .map(|l| {
                    known
                        .iter()
                        .find(|k| k.to_string() == *l)
                        .copied()
                        .ok_or_else(|| CliError::Invalid(format!("unknown slice {l:?}")))
                })
                .collect::<Result<_, _>>()?
        }
    };
    Ok(keys
        .into_iter()
        .map(|key| {
            let instance = match data.build.sets.get(&key) {
                None => {
                    let why = data
                        .build
                        .skipped
                        .iter()
                        .find(|s| s.group == key)
                        .map(|s| s.reason.clone());
                    Err(format!("no scenarios: {}", why.unwrap_or_default()))
                }
                Some(set) => data
                    .template
                    .instantiate(&set.scenarios)
                    .map_err(|e| match e {
                        IngestError::Invalid(report) => {
                            let ids: Vec<&str> =
                                set.scenarios.iter().map(|s| s.id.as_str()).collect();
                            format!(
                                "scenario set [{}] failed validation:\n{report}",
                                ids.join(", ")
                            )
                        }
                        other => other.to_string(),
                    }),
            };
            SliceInput {
                label: key.to_string(),
                group: Some(key),
                instance,
            }
        })
        .collect())
}

pub fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    match cfg.source()? {
        Source::Instances(entries) => {
            let mut slices = entries
                .iter()
                .map(load_instance)
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(order) = &cfg.slices {
                let mut picked = Vec::new();
                for label in order {
                    let i = slices
                        .iter()
                        .position(|s| &s.label == label)
                        .ok_or_else(|| CliError::Invalid(format!("unknown slice {label:?}")))?;
                    picked.push(slices.remove(i));
                }
                slices = picked;
            }
            Ok(Loaded { data: None, slices })
        }
        Source::Data {
            files,
            costs,
            policy,
        } => {
            let data = load_data(cfg, files, costs, policy)?;
            let slices = data_slices(cfg, &data)?;
            Ok(Loaded {
                data: Some(data),
                slices,
            })
        }
    }
}

impl Loaded {
    /// Every slice's instance, or one error listing every slice that failed.
    pub fn require_valid(self) -> Result<(Option<DataContext>, Vec<Slice>), CliError> {
        let failures: Vec<String> = self
            .slices
            .iter()
            .filter_map(|s| {
                s.instance
                    .as_ref()
                    .err()
                    .map(|e| format!("slice {}: {e}", s.label))
            })
            .collect();
        if !failures.is_empty() {
            return Err(CliError::Invalid(failures.join("\n")));
        }
        let slices = self
            .slices
            .into_iter()
            .map(|s| Slice {
                label: s.label,
                group: s.group,
                instance: s.instance.expect("checked above"),
            })
            .collect();
        Ok((self.data, slices))
    }
}
