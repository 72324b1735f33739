//! `shapesize`: simulate recurrent-event data, fit shape and size indices, and
//! rerun the reference Monte Carlo study. File layouts are in FORMATS.md.

mod commands;
mod options;
mod reference;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{fit, reproduce, simulate};

#[derive(Parser, Debug)]
#[command(
    name = "shapesize",
    version,
    about = "Shape-size rate models for recurrent events",
    after_help = "Options can also come from --config FILE (JSON), which overrides flags. \
                  Every run writes manifest.json; passing it back as --config repeats the run."
)]
struct Cli {
    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset from scenario M1, M2 or M3.
    Simulate(simulate::SimulateArgs),
    /// Fit the shape index and size index of a dataset.
    Fit(fit::FitArgs),
    /// Run a Monte Carlo study and compare it with the published tables.
    Reproduce(reproduce::ReproduceArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let res = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Reproduce(a) => reproduce::run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
