//! `splatsched` command-line front end.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{GenSceneArgs, PlaceArgs};
use config::RunFlags;

#[derive(Debug, Parser)]
#[command(name = "splatsched", version, about = "Locality-aware placement and communication simulation for distributed splatting training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene (dataset.json + points.bin).
    GenScene(GenSceneArgs),
    /// Partition point groups and images over machines and GPUs (partition.csv, quality.json).
    Partition(RunFlags),
    /// Place the patches of one scheduled batch (placement.csv, objective.json, access.json).
    Place(PlaceArgs),
    /// Simulate training communication for one strategy (report.json, iterations.csv).
    Simulate(RunFlags),
    /// Simulate both strategies on the same schedule and report the reduction.
    Compare(RunFlags),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::GenScene(a) => commands::gen_scene(&a),
        Command::Partition(f) => commands::partition(&f),
        Command::Place(a) => commands::place(&a),
        Command::Simulate(f) => commands::simulate(&f),
        Command::Compare(f) => commands::compare(&f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use splatsched::ErrorKind;
    let kind = err
        .chain()
        .find_map(|c| c.downcast_ref::<splatsched::Error>())
        .map(splatsched::Error::kind);
    match kind {
        Some(ErrorKind::Usage) => 2,
        Some(ErrorKind::Constraint) => 4,
        Some(ErrorKind::Data) | None => 3,
    }
}
