use std::path::{Path, PathBuf};

use gridplan_core::analysis::SolveMethod;
use gridplan_core::benders::BendersOptions;
use gridplan_core::scenario::{BuildOptions, Grouping, KMeansOptions, KPolicy};
use serde::Deserialize;

use crate::CliError;

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "GRIDPLAN_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceEntry {
    pub slice: String,
    pub path: PathBuf,
}

/// Clustering policy for data runs. The seed has no default.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPolicy {
    #[serde(default = "default_grouping")]
    pub grouping: Grouping,
    #[serde(default = "default_k_policy")]
    pub k_policy: KPolicy,
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_grouping() -> Grouping {
    Grouping::Month
}

fn default_k_policy() -> KPolicy {
    KPolicy::Fixed(4)
}

fn default_restarts() -> usize {
    KMeansOptions::default().restarts
}

fn default_max_iters() -> usize {
    KMeansOptions::default().max_iters
}

impl ScenarioPolicy {
    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            grouping: self.grouping,
            k_policy: self.k_policy,
            kmeans: KMeansOptions {
                restarts: self.restarts,
                max_iters: self.max_iters,
                seed: self.seed,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: SolveMethod,
    pub rel_gap: f64,
    pub max_iterations: usize,
    pub alpha_down: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let b = BendersOptions::default();
        Self {
            method: SolveMethod::Benders,
            rel_gap: b.rel_gap,
            max_iterations: b.max_iterations,
            alpha_down: b.alpha_down,
        }
    }
}

impl SolverConfig {
    pub fn benders_options(&self) -> BendersOptions {
        BendersOptions {
            max_iterations: self.max_iterations,
            rel_gap: self.rel_gap,
            alpha_down: self.alpha_down,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Add per-slice EVPI to `report`.
    pub evpi: bool,
    pub sensitivity_delta: f64,
    pub sensitivity_fuel: Option<String>,
    /// Run the uncapped-transmission comparison in `sensitivity`.
    pub transmission_relaxation: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            evpi: false,
            sensitivity_delta: 1000.0,
            sensitivity_fuel: None,
            transmission_relaxation: true,
        }
    }
}

/// A run configuration. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub instances: Vec<InstanceEntry>,
    #[serde(default)]
    pub data: Vec<PathBuf>,
    pub costs: Option<PathBuf>,
    pub scenarios: Option<ScenarioPolicy>,
    /// Restrict and order the slices to run.
    pub slices: Option<Vec<String>>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Length of the capacity estimation window; one year when unset.
    pub window_days: Option<i64>,
    /// Calendar year used to turn monthly slices into hours; the window's end year when unset.
    pub year: Option<i32>,
}

pub enum Source<'a> {
    Instances(&'a [InstanceEntry]),
    Data {
        files: &'a [PathBuf],
        costs: &'a Path,
        policy: &'a ScenarioPolicy,
    },
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Invalid(format!("bad config: {e}")))?;
        cfg.source()?;
        if let Some(d) = cfg.window_days {
            if d <= 0 {
                return Err(CliError::Invalid(format!(
                    "window_days must be positive, got {d}"
                )));
            }
        }
        Ok(cfg)
    }

    /// Read a config file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.instances.iter_mut().for_each(|e| resolve(&mut e.path));
        cfg.data.iter_mut().for_each(resolve);
        cfg.costs.iter_mut().for_each(resolve);
        let mut out = cfg
            .output_dir
            .take()
            .unwrap_or_else(|| PathBuf::from("output"));
        resolve(&mut out);
        cfg.output_dir = Some(out);
        Ok(cfg)
    }

    pub fn source(&self) -> Result<Source<'_>, CliError> {
        match (self.instances.is_empty(), self.data.is_empty()) {
            (false, true) => {
                if self.costs.is_some() || self.scenarios.is_some() {
                    return Err(CliError::Invalid(
                        "\"costs\" and \"scenarios\" only apply to data runs".into(),
                    ));
                }
                Ok(Source::Instances(&self.instances))
            }
            (true, false) => {
                let costs = self
                    .costs
                    .as_deref()
                    .ok_or_else(|| CliError::Invalid("data runs need a \"costs\" file".into()))?;
                let policy = self.scenarios.as_ref().ok_or_else(|| {
                    CliError::Invalid("data runs need a \"scenarios\" block with a seed".into())
                })?;
                Ok(Source::Data {
                    files: &self.data,
                    costs,
                    policy,
                })
            }
            (false, false) => Err(CliError::Invalid(
                "give either \"instances\" or \"data\", not both".into(),
            )),
            (true, true) => Err(CliError::Invalid(
                "config names no \"instances\" and no \"data\"".into(),
            )),
        }
    }

    /// The configured output directory unless the environment overrides it.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("output")),
        }
    }
}
