//! `npcspec`: Bayesian spectral density estimation from the command line.

mod commands;
mod config;
mod error;
mod io;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "npcspec", version, about = "Bayesian spectral density estimation with a nonparametrically corrected AR likelihood")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ARMA series with standard Gaussian innovations.
    Simulate(commands::simulate::Args),
    /// Fit the AR, NP or NPC model to a series.
    Fit(commands::fit::Args),
    /// Fit AR(p) for p = 0..p_max and report DIC and the likelihood curve.
    OrderScan(commands::order_scan::Args),
    /// Run a replicated simulation study from a TOML spec.
    Benchmark(commands::benchmark::Args),
    /// Plot a fitted spectral density against the log periodogram.
    Plot(commands::plot::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Fit(a) => commands::fit::run(a),
        Command::OrderScan(a) => commands::order_scan::run(a),
        Command::Benchmark(a) => commands::benchmark::run(a),
        Command::Plot(a) => commands::plot::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("npcspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
