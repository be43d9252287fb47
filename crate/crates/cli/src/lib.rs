//! The `gridplan` command line: config-driven runs over planning instances or hourly data.

pub mod commands;
pub mod config;
pub mod load;
pub mod output;

use std::ffi::OsString;
use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use gridplan_core::analysis::AnalysisError;
use gridplan_core::benders::BendersError;
use gridplan_core::ingest::IngestError;
use gridplan_core::model::ModelError;
use thiserror::Error;

pub use config::{RunConfig, OUTPUT_DIR_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Invalid(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<BendersError> for CliError {
    fn from(e: BendersError) -> Self {
        match e {
            BendersError::Model(m) => m.into(),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Model(m) => m.into(),
            AnalysisError::Benders(b) => b.into(),
            AnalysisError::NotConverged { .. } => CliError::Solver(e.to_string()),
            AnalysisError::Input(_) => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match &e {
            IngestError::Io(_) => CliError::Io(e.to_string()),
            IngestError::Csv(c) if c.is_io_error() => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Load and validate every slice.
    Validate,
    /// Cluster hourly data into scenario sets.
    Scenarios,
    /// Solve every slice.
    Solve,
    /// Value of perfect information and of the stochastic solution.
    Evpi,
    /// Capacity expansion and transmission relaxation experiments.
    Sensitivity,
    /// Solve every slice and aggregate costs over the year.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Scenarios => "scenarios",
            Command::Solve => "solve",
            Command::Evpi => "evpi",
            Command::Sensitivity => "sensitivity",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gridplan",
    version,
    about = "Two-stage stochastic interchange planning",
    after_help = "Exit codes: 0 ok, 1 I/O, 2 validation, 3 solver.\n\
                  GRIDPLAN_OUTPUT_DIR overrides the configured output directory."
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Print one line per Benders iteration.
    #[arg(long)]
    pub trace: bool,
    /// Run slices in parallel on N threads. Output order does not depend on N.
    #[arg(long)]
    pub jobs: Option<NonZeroUsize>,
    /// Leave the UTC timestamp out of artifact names.
    #[arg(long)]
    pub deterministic_names: bool,
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    let ctx = commands::Ctx {
        cfg,
        trace: cli.trace,
        parallel: cli.jobs.is_some(),
        deterministic: cli.deterministic_names,
    };
    let work = || commands::dispatch(cli.command, &ctx);
    match cli.jobs {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build()
            .map_err(|e| CliError::Io(format!("cannot start {n} worker threads: {e}")))?
            .install(work),
    }
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.exit_code() {
                0 => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
