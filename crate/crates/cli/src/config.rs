//! Run-configuration document: parsing, validation, and translation into
//! engine types.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use quarc_sim::cluster::{builtin_2d, ThresholdTable};
use quarc_sim::engine::{ClusterMode, RequestDistribution, SimConfig, StaticPartition};
use quarc_sim::topo::{
    self, make_grid, make_waxman, NetworkGraph, ParameterSchedule, ScheduleEntry, WaxmanConfig,
};

fn default_width() -> u32 {
    1
}
fn default_avg_degree() -> f64 {
    6.0
}
fn default_qubit_range() -> (u32, u32) {
    (10, 14)
}
fn default_width_range() -> (u32, u32) {
    (3, 7)
}
fn default_e_p() -> f64 {
    0.6
}
fn default_q() -> f64 {
    0.9
}
fn default_waxman_param() -> f64 {
    0.4
}
fn default_epoch() -> u64 {
    500
}
fn default_queue() -> u32 {
    10
}
fn default_k() -> u32 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Grid {
        side: u32,
        #[serde(default = "default_width")]
        width: u32,
        /// Memory qubits per node; omit for unlimited.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        qubits: Option<u32>,
        p: f64,
        q: f64,
    },
    Waxman {
        nodes: u32,
        #[serde(default = "default_avg_degree")]
        avg_degree: f64,
        #[serde(default = "default_qubit_range")]
        qubit_range: (u32, u32),
        #[serde(default = "default_width_range")]
        width_range: (u32, u32),
        #[serde(default = "default_e_p")]
        e_p: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default = "default_waxman_param")]
        alpha_w: f64,
        #[serde(default = "default_waxman_param")]
        beta_w: f64,
    },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    Single,
    Singletons,
    GridSquares { cluster_side: u32 },
    Explicit(Vec<Vec<u32>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    Adaptive,
    Static { partition: PartitionSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThresholdSource {
    #[serde(rename = "builtin-2d")]
    Builtin2d,
    File(PathBuf),
    Inline(serde_json::Value),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<ScheduleEntry>>,
    /// Threshold table for adaptive mode (defaults to the builtin grid
    /// table); ignored in static mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdSource>,
    pub mode: ModeSpec,
    pub slots: i64,
    #[serde(default = "default_epoch")]
    pub epoch_length: u64,
    #[serde(default = "default_queue")]
    pub queue_capacity: u32,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default)]
    pub request_distribution: RequestDistribution,
    #[serde(default)]
    pub consecutive_only_edges: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Parse and validate a config document, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).context("invalid run config")?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.slots < 0 {
        bail!("key \"slots\" must be non-negative, got {}", cfg.slots);
    }
    if cfg.epoch_length == 0 {
        bail!("key \"epoch_length\" must be positive");
    }
    if cfg.k < 2 {
        bail!("key \"k\" must be at least 2, got {}", cfg.k);
    }
    if let ModeSpec::Static {
        partition: PartitionSpec::GridSquares { cluster_side },
    } = &cfg.mode
    {
        match &cfg.topology {
            TopologySpec::Grid { side, .. } => {
                if *cluster_side == 0 || side % cluster_side != 0 {
                    bail!(
                        "key \"mode.static.partition\": cluster_side {cluster_side} does not divide grid side {side}"
                    );
                }
            }
            _ => bail!("key \"mode.static.partition\": grid_squares requires a grid topology"),
        }
    }
    Ok(())
}

impl RunConfig {
    /// Serialize with all defaults materialized.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical (defaults-filled) JSON form.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        format!("{:x}", hasher.finalize())
    }

    /// Build the topology and the schedule. A schedule in the config takes
    /// precedence over one embedded in a topology file.
    pub fn build_topology(&self) -> Result<(NetworkGraph, ParameterSchedule)> {
        let (graph, embedded) = match &self.topology {
            TopologySpec::Grid {
                side,
                width,
                qubits,
                p,
                q,
            } => (make_grid(*side, *width, *qubits, *p, *q)?, None),
            TopologySpec::Waxman {
                nodes,
                avg_degree,
                qubit_range,
                width_range,
                e_p,
                q,
                alpha_w,
                beta_w,
            } => {
                let wax = WaxmanConfig {
                    qubit_range: *qubit_range,
                    width_range: *width_range,
                    mean_channel_prob: *e_p,
                    fusion_prob: *q,
                    alpha_w: *alpha_w,
                    beta_w: *beta_w,
                    ..WaxmanConfig::new(*nodes, *avg_degree)
                };
                (make_waxman(&wax, self.seed)?, None)
            }
            TopologySpec::File(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading topology {}", path.display()))?;
                let (graph, schedule) = topo::json::from_json(&text)?;
                (graph, schedule)
            }
        };
        let schedule = match &self.schedule {
            Some(entries) => ParameterSchedule::new(entries.clone())?,
            None => embedded.unwrap_or_else(ParameterSchedule::empty),
        };
        Ok((graph, schedule))
    }

    pub fn build_thresholds(&self) -> Result<ThresholdTable> {
        Ok(match &self.thresholds {
            None | Some(ThresholdSource::Builtin2d) => builtin_2d(),
            Some(ThresholdSource::File(path)) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading thresholds {}", path.display()))?;
                ThresholdTable::from_json(&text)?
            }
            Some(ThresholdSource::Inline(value)) => {
                ThresholdTable::from_json(&serde_json::to_string(value)?)?
            }
        })
    }

    /// Translate into the engine config (topology must be built first for
    /// grid-partition validation).
    pub fn build_sim_config(&self) -> Result<SimConfig> {
        let mode = match &self.mode {
            ModeSpec::Adaptive => ClusterMode::Adaptive {
                thresholds: self.build_thresholds()?,
            },
            ModeSpec::Static { partition } => {
                let partition = match partition {
                    PartitionSpec::Single => StaticPartition::Single,
                    PartitionSpec::Singletons => StaticPartition::Singletons,
                    PartitionSpec::GridSquares { cluster_side } => match &self.topology {
                        TopologySpec::Grid { side, .. } => StaticPartition::GridSquares {
                            side: *side,
                            cluster_side: *cluster_side,
                        },
                        _ => bail!("grid_squares partition requires a grid topology"),
                    },
                    PartitionSpec::Explicit(parts) => StaticPartition::Explicit(parts.clone()),
                };
                ClusterMode::Static { partition }
            }
        };
        Ok(SimConfig {
            slots: self.slots as u64,
            epoch_length: self.epoch_length,
            queue_capacity: self.queue_capacity,
            split_arity: self.k,
            seed: self.seed,
            mode,
            request_distribution: self.request_distribution,
            consecutive_only_edges: self.consecutive_only_edges,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "topology": {"grid": {"side": 4, "p": 0.9, "q": 0.9}},
        "mode": "adaptive",
        "slots": 100,
        "seed": 7
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.queue_capacity, 10);
        assert_eq!(cfg.epoch_length, 500);
        assert_eq!(cfg.k, 4);
        assert_eq!(cfg.request_distribution, RequestDistribution::Uniform);
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let again = parse_config(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn negative_slots_is_named_in_the_error() {
        let text = MINIMAL.replace("\"slots\": 100", "\"slots\": -1");
        let err = parse_config(&text).unwrap_err();
        assert!(format!("{err:#}").contains("slots"), "{err:#}");
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("\"slots\": 100", "\"slots\": 100, \"typo_key\": 1");
        let err = parse_config(&text).unwrap_err();
        assert!(format!("{err:#}").contains("typo_key"), "{err:#}");
    }

    #[test]
    fn grid_partition_on_waxman_is_rejected() {
        let text = r#"{
            "topology": {"waxman": {"nodes": 50}},
            "mode": {"static": {"partition": {"grid_squares": {"cluster_side": 2}}}},
            "slots": 10,
            "seed": 1
        }"#;
        let err = parse_config(text).unwrap_err();
        assert!(format!("{err:#}").contains("grid"), "{err:#}");
    }

    #[test]
    fn topology_and_sim_build() {
        let cfg = parse_config(MINIMAL).unwrap();
        let (graph, schedule) = cfg.build_topology().unwrap();
        assert_eq!(graph.node_count(), 16);
        assert_eq!(schedule, ParameterSchedule::empty());
        let sim = cfg.build_sim_config().unwrap();
        assert_eq!(sim.slots, 100);
        assert!(matches!(sim.mode, ClusterMode::Adaptive { .. }));
    }
}
