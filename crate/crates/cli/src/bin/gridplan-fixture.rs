//! Writes the bundled synthetic year: hourly CSV, cost config and a run config.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Parser;
use gridplan_core::ingest::{fixture, write_hourly_csv};

#[derive(Parser)]
#[command(
    name = "gridplan-fixture",
    about = "Write the synthetic 13-region year and its configs"
)]
struct Args {
    /// Directory to write into; created if missing.
    dir: PathBuf,
    /// Seed of the synthetic year.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Clustering seed written into the run config.
    #[arg(long, default_value_t = 7)]
    cluster_seed: u64,
}

fn main() {
    let args = Args::parse();
    if let Err(e) = write(&args) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn write(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    std::fs::create_dir_all(&args.dir)?;
    let csv_path = args.dir.join("synthetic_2021.csv");
    write_hourly_csv(
        &fixture::synthetic_year(args.seed),
        BufWriter::new(File::create(&csv_path)?),
    )?;

    let costs = serde_json::to_string_pretty(&fixture::cost_config())?;
    std::fs::write(args.dir.join("costs.json"), costs + "\n")?;

    let run = serde_json::json!({
        "data": ["synthetic_2021.csv"],
        "costs": "costs.json",
        "scenarios": {"grouping": "month", "k_policy": {"fixed": 4}, "seed": args.cluster_seed},
        "solver": {"method": "benders", "rel_gap": 1e-6},
        "output_dir": "output",
    });
    std::fs::write(
        args.dir.join("config.json"),
        serde_json::to_string_pretty(&run)? + "\n",
    )?;
    for name in ["synthetic_2021.csv", "costs.json", "config.json"] {
        println!("wrote {}", args.dir.join(name).display());
    }
    Ok(())
}
