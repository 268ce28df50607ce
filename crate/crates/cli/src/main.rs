mod calibrate;
mod config;
mod run;
mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "quarc",
    version,
    about = "Discrete time-slot simulator for adaptive-clustering entanglement routing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation from a config file and write metric CSVs.
    Run(run::RunArgs),
    /// Sweep static grid configurations and derive 2-D thresholds.
    CalibrateGrid(calibrate::CalibrateGridArgs),
    /// Derive topology-specific thresholds around the singleton/adaptive
    /// crossover point.
    CalibrateTopology(calibrate::CalibrateTopologyArgs),
    /// Fan out (config, seed) runs and aggregate their throughput.
    Sweep(sweep::SweepArgs),
}

/// Output directory precedence: flag, then config, then QUARC_SIM_OUT,
/// then ./out.
fn resolve_out(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config)
        .or_else(|| std::env::var_os("QUARC_SIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => run::run(args),
        Cmd::CalibrateGrid(args) => calibrate::calibrate_grid(args),
        Cmd::CalibrateTopology(args) => calibrate::calibrate_topology(args),
        Cmd::Sweep(args) => sweep::sweep(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let inconclusive = err.chain().any(|c| {
                matches!(
                    c.downcast_ref::<quarc_sim::Error>(),
                    Some(quarc_sim::Error::CalibrationInconclusive(_))
                )
            });
            std::process::exit(if inconclusive { 2 } else { 1 });
        }
    }
}
