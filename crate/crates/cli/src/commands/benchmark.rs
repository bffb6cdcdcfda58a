use std::path::PathBuf;

use npc_core::benchmark::{run_benchmark, BenchmarkSpec, Scale};

use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, read_text, write_json, write_text};

#[derive(clap::Args)]
pub struct Args {
    /// TOML benchmark spec file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Full replicate counts and chain lengths.
    #[arg(long)]
    paper_scale: bool,
    /// Size of the worker pool (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
}

/// Largest tolerated fraction of failed replicate fits.
const MAX_FAILURE_FRACTION: f64 = 0.01;

pub fn run(args: Args) -> CliResult<()> {
    let text = read_text(&args.spec)?;
    let mut spec: BenchmarkSpec = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.spec.display())))?;
    if args.paper_scale {
        spec.scale = Scale::Paper;
    }
    if let Some(s) = args.master_seed {
        spec.master_seed = s;
    }
    spec.validate()?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_benchmark(&spec, workers)?;
    ensure_dir(&args.out_dir)?;
    write_text(&args.out_dir.join("table.csv"), &report.table_csv())?;
    write_text(&args.out_dir.join("replicates.csv"), &report.replicates_csv())?;
    write_json(&args.out_dir.join("provenance.json"), &report)?;
    let failed = report.n_failed();
    if report.failure_fraction() > MAX_FAILURE_FRACTION {
        return Err(CliError::PartialBenchmark(format!(
            "{failed} of {} replicate fits failed",
            report.replicates.len()
        )));
    }
    if failed > 0 {
        eprintln!("warning: {failed} replicate fits failed");
    }
    Ok(())
}
