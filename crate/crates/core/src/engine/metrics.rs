use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterId;
use crate::error::Result;
use crate::route::RequestId;
use crate::topo::{NetworkGraph, NodeId};

/// Per-slot service counters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    /// Requests for which a cluster path was selected this slot.
    pub attempted: u32,
    pub satisfied: u32,
}

/// Lifecycle of one generated request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: RequestId,
    pub source: NodeId,
    pub destination: NodeId,
    pub arrival_slot: u64,
    pub satisfied_slot: Option<u64>,
    /// Shortest-path hop count in the node graph at generation time.
    pub hop_distance: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterEpochStats {
    pub cluster: ClusterId,
    pub size: u32,
    pub attempts: u64,
    pub passes: u64,
}

/// Per-epoch, per-cluster passing statistics (pre-reconfiguration).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub first_slot: u64,
    pub slots: u64,
    pub clusters: Vec<ClusterEpochStats>,
}

/// Node-to-cluster assignment active from a given slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringSnapshot {
    pub active_from_slot: u64,
    /// Cluster of node `i` at index `i`.
    pub assignment: Vec<ClusterId>,
}

/// Full record of one simulation run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub slots: Vec<SlotRecord>,
    pub requests: Vec<RequestRecord>,
    pub epochs: Vec<EpochRecord>,
    pub snapshots: Vec<ClusteringSnapshot>,
}

impl MetricsLog {
    pub fn total_satisfied(&self) -> u64 {
        self.slots.iter().map(|s| s.satisfied as u64).sum()
    }

    /// Mean satisfied requests per slot over the whole run.
    pub fn throughput(&self) -> f64 {
        if self.slots.is_empty() {
            return 0.0;
        }
        self.total_satisfied() as f64 / self.slots.len() as f64
    }

    /// Mean satisfied requests per slot over a slot range `[from, to)`.
    pub fn throughput_in(&self, from: u64, to: u64) -> f64 {
        let mut satisfied = 0u64;
        let mut slots = 0u64;
        for s in &self.slots {
            if s.slot >= from && s.slot < to {
                satisfied += s.satisfied as u64;
                slots += 1;
            }
        }
        if slots == 0 {
            0.0
        } else {
            satisfied as f64 / slots as f64
        }
    }

    /// Write the metric families as CSV files into `dir`
    /// (slots.csv, requests.csv, epochs.csv, clusters.csv).
    pub fn write_csv_files(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut slots = String::from("slot,attempted,satisfied\n");
        for s in &self.slots {
            slots.push_str(&format!("{},{},{}\n", s.slot, s.attempted, s.satisfied));
        }
        fs::write(dir.join("slots.csv"), slots)?;

        let mut requests = String::from(
            "request_id,source,destination,arrival_slot,satisfied_slot,hop_distance\n",
        );
        for r in &self.requests {
            let satisfied = r.satisfied_slot.map(|s| s.to_string()).unwrap_or_default();
            requests.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.id, r.source, r.destination, r.arrival_slot, satisfied, r.hop_distance
            ));
        }
        fs::write(dir.join("requests.csv"), requests)?;

        let mut epochs = String::from("epoch,first_slot,slots,cluster_id,size,attempts,passes\n");
        for e in &self.epochs {
            for c in &e.clusters {
                epochs.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    e.epoch, e.first_slot, e.slots, c.cluster, c.size, c.attempts, c.passes
                ));
            }
        }
        fs::write(dir.join("epochs.csv"), epochs)?;

        let mut clusters = String::from("active_from_slot,node_id,cluster_id\n");
        for snap in &self.snapshots {
            for (node, cluster) in snap.assignment.iter().enumerate() {
                clusters.push_str(&format!("{},{node},{cluster}\n", snap.active_from_slot));
            }
        }
        fs::write(dir.join("clusters.csv"), clusters)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowThroughput {
    pub start_slot: u64,
    pub slots: u64,
    pub satisfied: u64,
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    pub mean: f64,
    pub p50: u64,
    pub p90: u64,
    pub max: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBucket {
    pub hop_distance: u32,
    pub requests: u64,
    pub satisfied: u64,
    pub success_rate: f64,
    pub starvation_rate: f64,
}

/// Mean cluster size split by the vertical midline of the topology,
/// assigning each cluster to the half containing its member centroid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSizes {
    pub active_from_slot: u64,
    pub upper_mean_size: f64,
    pub lower_mean_size: f64,
}

/// Windowed and stratified views over a [`MetricsLog`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub throughput: Vec<WindowThroughput>,
    pub latency: LatencyStats,
    pub by_distance: Vec<DistanceBucket>,
    pub cluster_sizes_by_half: Vec<HalfPlaneSizes>,
}

impl Report {
    pub fn write_json(&self, mut out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Summarize a run: windowed throughput, latency distribution, per-distance
/// success rates, and per-snapshot mean cluster sizes by topology half.
pub fn summarize(log: &MetricsLog, graph: &NetworkGraph, window: u64) -> Report {
    let window = window.max(1);
    let mut throughput = Vec::new();
    let mut i = 0usize;
    while i < log.slots.len() {
        let start = log.slots[i].slot;
        let mut satisfied = 0u64;
        let mut count = 0u64;
        while i < log.slots.len() && log.slots[i].slot < start + window {
            satisfied += log.slots[i].satisfied as u64;
            count += 1;
            i += 1;
        }
        throughput.push(WindowThroughput {
            start_slot: start,
            slots: count,
            satisfied,
            rate: satisfied as f64 / count as f64,
        });
    }

    let mut latencies: Vec<u64> = log
        .requests
        .iter()
        .filter_map(|r| r.satisfied_slot.map(|s| s - r.arrival_slot))
        .collect();
    latencies.sort_unstable();
    let latency = if latencies.is_empty() {
        LatencyStats::default()
    } else {
        let count = latencies.len() as u64;
        let mean = latencies.iter().sum::<u64>() as f64 / count as f64;
        let pick = |q: f64| {
            latencies[((q * (count - 1) as f64).round() as usize).min(latencies.len() - 1)]
        };
        LatencyStats {
            count,
            mean,
            p50: pick(0.5),
            p90: pick(0.9),
            max: *latencies.last().expect("non-empty"),
        }
    };

    let mut buckets: std::collections::BTreeMap<u32, (u64, u64)> =
        std::collections::BTreeMap::new();
    for r in &log.requests {
        let e = buckets.entry(r.hop_distance).or_default();
        e.0 += 1;
        if r.satisfied_slot.is_some() {
            e.1 += 1;
        }
    }
    let by_distance = buckets
        .into_iter()
        .map(|(hop_distance, (requests, satisfied))| {
            let success_rate = satisfied as f64 / requests as f64;
            DistanceBucket {
                hop_distance,
                requests,
                satisfied,
                success_rate,
                starvation_rate: 1.0 - success_rate,
            }
        })
        .collect();

    let mid_y = {
        let (min, max) = graph
            .nodes()
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), n| {
                (lo.min(n.y), hi.max(n.y))
            });
        0.5 * (min + max)
    };
    let cluster_sizes_by_half = log
        .snapshots
        .iter()
        .map(|snap| {
            let mut sizes: std::collections::BTreeMap<ClusterId, (f64, u64)> =
                std::collections::BTreeMap::new();
            for (node, cluster) in snap.assignment.iter().enumerate() {
                let e = sizes.entry(*cluster).or_default();
                e.0 += graph.nodes()[node].y;
                e.1 += 1;
            }
            let mut upper = (0.0, 0u64);
            let mut lower = (0.0, 0u64);
            for (_, (y_sum, count)) in sizes {
                let centroid = y_sum / count as f64;
                let side = if centroid >= mid_y {
                    &mut upper
                } else {
                    &mut lower
                };
                side.0 += count as f64;
                side.1 += 1;
            }
            HalfPlaneSizes {
                active_from_slot: snap.active_from_slot,
                upper_mean_size: if upper.1 == 0 {
                    0.0
                } else {
                    upper.0 / upper.1 as f64
                },
                lower_mean_size: if lower.1 == 0 {
                    0.0
                } else {
                    lower.0 / lower.1 as f64
                },
            }
        })
        .collect();

    Report {
        throughput,
        latency,
        by_distance,
        cluster_sizes_by_half,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::make_grid;

    fn synthetic_log() -> MetricsLog {
        // 20 slots: slots 0..9 satisfy 1 each, 10..19 satisfy 2 each.
        let slots = (0..20)
            .map(|slot| SlotRecord {
                slot,
                attempted: 3,
                satisfied: if slot < 10 { 1 } else { 2 },
            })
            .collect();
        let requests = (0..6u64)
            .map(|i| RequestRecord {
                id: RequestId(i),
                source: NodeId(0),
                destination: NodeId(3),
                arrival_slot: i,
                satisfied_slot: if i % 2 == 0 { Some(i + 4) } else { None },
                hop_distance: if i < 3 { 2 } else { 4 },
            })
            .collect();
        MetricsLog {
            slots,
            requests,
            epochs: vec![],
            snapshots: vec![],
        }
    }

    #[test]
    fn windowed_throughput_matches_hand_computation() {
        let g = make_grid(2, 1, Some(4), 1.0, 1.0).unwrap();
        let report = summarize(&synthetic_log(), &g, 5);
        let rates: Vec<f64> = report.throughput.iter().map(|w| w.rate).collect();
        assert_eq!(rates, vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(report.throughput[2].start_slot, 10);
        assert_eq!(report.throughput[2].satisfied, 10);
    }

    #[test]
    fn latency_and_distance_buckets() {
        let g = make_grid(2, 1, Some(4), 1.0, 1.0).unwrap();
        let report = summarize(&synthetic_log(), &g, 5);
        // Satisfied requests 0, 2, 4 all have latency 4.
        assert_eq!(report.latency.count, 3);
        assert_eq!(report.latency.mean, 4.0);
        assert_eq!(report.latency.max, 4);
        // Distance 2: requests 0,1,2 with 2 satisfied.
        let d2 = report
            .by_distance
            .iter()
            .find(|b| b.hop_distance == 2)
            .unwrap();
        assert_eq!(d2.requests, 3);
        assert_eq!(d2.satisfied, 2);
        let d4 = report
            .by_distance
            .iter()
            .find(|b| b.hop_distance == 4)
            .unwrap();
        assert!((d4.starvation_rate - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_latency_when_satisfied_on_arrival() {
        let g = make_grid(2, 1, Some(4), 1.0, 1.0).unwrap();
        let log = MetricsLog {
            slots: vec![SlotRecord {
                slot: 0,
                attempted: 1,
                satisfied: 1,
            }],
            requests: vec![RequestRecord {
                id: RequestId(0),
                source: NodeId(0),
                destination: NodeId(1),
                arrival_slot: 5,
                satisfied_slot: Some(5),
                hop_distance: 1,
            }],
            epochs: vec![],
            snapshots: vec![],
        };
        let report = summarize(&log, &g, 1);
        assert_eq!(report.latency.mean, 0.0);
        assert_eq!(report.latency.max, 0);
    }

    #[test]
    fn no_successes_means_full_starvation() {
        let g = make_grid(2, 1, Some(4), 1.0, 1.0).unwrap();
        let mut log = synthetic_log();
        for s in &mut log.slots {
            s.satisfied = 0;
        }
        for r in &mut log.requests {
            r.satisfied_slot = None;
        }
        let report = summarize(&log, &g, 4);
        assert!(report.throughput.iter().all(|w| w.rate == 0.0));
        assert!(report.by_distance.iter().all(|b| b.starvation_rate == 1.0));
    }
}
