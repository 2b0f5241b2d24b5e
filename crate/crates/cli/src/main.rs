//! `scca`: fit, simulate and benchmark robust smoothed functional CCA.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};
use config::Flags;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "scca",
    version,
    about = "Robust smoothed canonical correlation for paired functional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the first canonical pair of two curve samples.
    Fit(Flags),
    /// Draw a paired sample from the canonical model.
    Simulate(Flags),
    /// Replicated convergence study over a sample-size schedule.
    Consistency(Flags),
    /// Classical versus robust fits under contamination.
    Robustness(Flags),
    /// K-fold choice of the smoothing parameter.
    TauSelect(Flags),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(f) => f.resolve().and_then(|c| commands::fit(&c)),
        Command::Simulate(f) => f.resolve().and_then(|c| commands::simulate(&c)),
        Command::Consistency(f) => f.resolve().and_then(|c| commands::consistency(&c)),
        Command::Robustness(f) => f.resolve().and_then(|c| commands::robustness(&c)),
        Command::TauSelect(f) => f.resolve().and_then(|c| commands::tau_select(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scca: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
