//! `bridgekit` command-line driver.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

mod cloud;
mod commands;
mod error;
mod manifest;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{evaluate, export, generate, plot, sample, train};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "bridgekit",
    version,
    about = "Train and sample diffusion bridges from aligned pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic aligned dataset as a pair CSV.
    Generate(generate::Args),
    /// Train drift and Doob-score networks on a pair CSV.
    Train(train::Args),
    /// Simulate trajectories from the x0 rows of a pair CSV with a trained drift.
    Sample(sample::Args),
    /// Compare point clouds with distribution and alignment metrics.
    Evaluate(evaluate::Args),
    /// Draw 2-D trajectories and matchings as SVG.
    Plot(plot::Args),
    /// Write a model file holding only the drift network.
    ExportDrift(export::Args),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BRIDGEKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "BRIDGEKIT_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let argv: Vec<String> = std::env::args().collect();
    match cli.command {
        Command::Generate(args) => generate::run(&args, &argv),
        Command::Train(args) => train::run(&args, &argv),
        Command::Sample(args) => sample::run(&args, &argv),
        Command::Evaluate(args) => evaluate::run(&args, &argv),
        Command::Plot(args) => plot::run(&args, &argv),
        Command::ExportDrift(args) => export::run(&args, &argv),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
