use std::fs::{self, File};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use quarc_sim::calibrate::{
    derive_2d_thresholds, derive_topology_thresholds, sweep_static_grid, GridSweepConfig,
    TopologyCalibConfig,
};
use quarc_sim::cluster::{builtin_2d, ThresholdTable};

use crate::config::load_config;

#[derive(Args)]
pub struct CalibrateGridArgs {
    /// Grid side length.
    #[arg(long)]
    pub side: u32,
    /// Fusion success probability held fixed during the sweep.
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    #[arg(long, default_value_t = 0.05)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.95)]
    pub p_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub p_step: f64,
    /// Explicit p grid (overrides p-min/p-max/p-step).
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    /// Square cluster side lengths (default: powers of two dividing side).
    #[arg(long, value_delimiter = ',')]
    pub configs: Option<Vec<u32>>,
    #[arg(long, default_value_t = 2000)]
    pub slots: u64,
    #[arg(long, default_value_t = 10)]
    pub runs: u32,
    /// Qubits per node (0 = unlimited).
    #[arg(long, default_value_t = 4)]
    pub qubits: u32,
    #[arg(long, default_value_t = 1)]
    pub width: u32,
    #[arg(long, default_value_t = 500)]
    pub epoch: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn calibrate_grid(args: CalibrateGridArgs) -> Result<()> {
    let p_values = match &args.p_list {
        Some(list) => list.clone(),
        None => {
            if args.p_step <= 0.0 || args.p_min >= args.p_max {
                bail!("p grid must satisfy p_min < p_max with positive p_step");
            }
            let mut p_values = Vec::new();
            let mut p = args.p_min;
            while p <= args.p_max + 1e-9 {
                p_values.push(p);
                p += args.p_step;
            }
            p_values
        }
    };
    let mut cfg = GridSweepConfig::new(args.side);
    cfg.fusion_prob = args.q;
    cfg.p_values = p_values;
    if let Some(configs) = args.configs {
        cfg.cluster_sides = configs;
    }
    cfg.slots_per_point = args.slots;
    cfg.runs = args.runs;
    cfg.qubits_per_node = (args.qubits > 0).then_some(args.qubits);
    cfg.width = args.width;
    cfg.epoch_length = args.epoch;

    let out = crate::resolve_out(args.out, None);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let sweep = sweep_static_grid(&cfg, args.seed)?;
    sweep.write_csv(File::create(out.join("sweep.csv"))?)?;
    let table = derive_2d_thresholds(&sweep)?;
    fs::write(out.join("thresholds.json"), table.to_json())?;
    let manifest = json!({
        "kind": "calibrate-grid",
        "side": args.side,
        "q": args.q,
        "p_values": sweep.p_values,
        "cluster_sides": sweep.cluster_sides,
        "slots": args.slots,
        "runs": args.runs,
        "seed": args.seed,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    println!(
        "calibration complete: thresholds.json and sweep.csv in {}",
        out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct CalibrateTopologyArgs {
    /// Run config supplying the topology and master seed.
    #[arg(long)]
    pub config: PathBuf,
    /// Grid threshold table to refine (default: builtin).
    #[arg(long)]
    pub grid_thresholds: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub runs: u32,
    #[arg(long, default_value_t = 1500)]
    pub slots: u64,
    #[arg(long, default_value_t = 500)]
    pub epoch: u64,
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    #[arg(long, default_value_t = 0.05)]
    pub bracket_lo: f64,
    #[arg(long, default_value_t = 0.95)]
    pub bracket_hi: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn calibrate_topology(args: CalibrateTopologyArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let (graph, _) = cfg.build_topology()?;
    let grid_table = match &args.grid_thresholds {
        None => builtin_2d(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading thresholds {}", path.display()))?;
            ThresholdTable::from_json(&text)?
        }
    };
    let calib = TopologyCalibConfig {
        bracket: (args.bracket_lo, args.bracket_hi),
        runs: args.runs,
        slots_per_eval: args.slots,
        epoch_length: args.epoch,
        queue_capacity: cfg.queue_capacity,
        fusion_prob: args.q,
        ..TopologyCalibConfig::default()
    };
    let out = crate::resolve_out(args.out, cfg.output_dir.clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let result = derive_topology_thresholds(&graph, &grid_table, &calib, cfg.seed)?;
    fs::write(out.join("thresholds.json"), result.table.to_json())?;
    let manifest = json!({
        "kind": "calibrate-topology",
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "p_star": result.p_star,
        "split_cap": result.split_cap,
        "merge_cap": result.merge_cap,
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    println!(
        "topology calibration complete: p* = {:.4}, thresholds in {}",
        result.p_star,
        out.display()
    );
    Ok(())
}
