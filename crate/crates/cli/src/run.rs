use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use quarc_sim::engine::{summarize, Simulation, TraceLevel, TraceSink};
use quarc_sim::topo;

use crate::config::{load_config, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TraceArg {
    None,
    Routing,
    Full,
}

#[derive(Args)]
pub struct RunArgs {
    /// Run-config JSON document.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's slot count.
    #[arg(long)]
    pub slots: Option<u64>,
    /// Override the config's epoch length.
    #[arg(long)]
    pub epoch: Option<u64>,
    /// Output directory (falls back to config, then QUARC_SIM_OUT, then ./out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-slot JSON-lines trace verbosity.
    #[arg(long, value_enum, default_value_t = TraceArg::None)]
    pub trace: TraceArg,
}

pub fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_overrides(&mut cfg, args.seed, args.slots, args.epoch);
    let out = crate::resolve_out(args.out, cfg.output_dir.clone());
    let trace = match args.trace {
        TraceArg::None => None,
        TraceArg::Routing => Some(TraceLevel::Routing),
        TraceArg::Full => Some(TraceLevel::Full),
    };
    let throughput = run_to_dir(&cfg, &out, trace)?;
    println!(
        "run complete: {} slots, mean throughput {:.4} (artifacts in {})",
        cfg.slots,
        throughput,
        out.display()
    );
    Ok(())
}

pub fn apply_overrides(
    cfg: &mut RunConfig,
    seed: Option<u64>,
    slots: Option<u64>,
    epoch: Option<u64>,
) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = slots {
        cfg.slots = s as i64;
    }
    if let Some(e) = epoch {
        cfg.epoch_length = e;
    }
}

/// Execute a config and write all artifacts into `dir`. Returns the run's
/// mean throughput.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path, trace: Option<TraceLevel>) -> Result<f64> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (graph, schedule) = cfg.build_topology()?;
    let sim_cfg = cfg.build_sim_config()?;
    let epoch_length = sim_cfg.epoch_length;
    let mut sim = Simulation::new(&graph, &schedule, sim_cfg)?;
    if let Some(level) = trace {
        let file = File::create(dir.join("trace.jsonl"))?;
        sim.set_trace(TraceSink {
            level,
            out: Box::new(BufWriter::new(file)),
        });
    }
    let log = sim.run()?;
    log.write_csv_files(dir)?;
    let report = summarize(&log, &graph, epoch_length);
    report.write_json(File::create(dir.join("report.json"))?)?;
    fs::write(
        dir.join("topology.json"),
        topo::json::to_json(&graph, Some(&schedule)),
    )?;
    write_manifest(cfg, dir)?;
    Ok(log.throughput())
}

pub fn write_manifest(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let manifest = json!({
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::from_str::<serde_json::Value>(&cfg.to_json())?,
    });
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}
