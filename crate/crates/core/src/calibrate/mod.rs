//! Threshold derivation: static-configuration sweeps over 2-D grids with
//! transition-point detection, and topology-specific refinement around the
//! critical point where singleton clusters tie with adaptive clustering.

use std::collections::BTreeMap;
use std::io::Write;

use crate::cluster::{SizeTable, ThresholdTable};
use crate::engine::{
    run_simulation, ClusterMode, MetricsLog, SimConfig, Simulation, StaticPartition,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::topo::{make_grid, NetworkGraph, Overrides, ParameterSchedule, ScheduleEntry};

/// Setup for the 2-D grid sweep (unit widths; 4 qubits per node by default).
#[derive(Clone, Debug)]
pub struct GridSweepConfig {
    pub side: u32,
    pub fusion_prob: f64,
    pub p_values: Vec<f64>,
    /// Square cluster side lengths; each must divide `side`.
    pub cluster_sides: Vec<u32>,
    pub slots_per_point: u64,
    pub runs: u32,
    pub qubits_per_node: Option<u32>,
    pub width: u32,
    pub epoch_length: u64,
    pub queue_capacity: u32,
}

impl GridSweepConfig {
    pub fn new(side: u32) -> Self {
        Self {
            side,
            fusion_prob: 0.9,
            p_values: (1..20).map(|i| i as f64 * 0.05).collect(),
            cluster_sides: powers_of_two_dividing(side),
            slots_per_point: 2000,
            runs: 10,
            qubits_per_node: Some(4),
            width: 1,
            epoch_length: 500,
            queue_capacity: 10,
        }
    }
}

fn powers_of_two_dividing(side: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut c = 1;
    while c <= side {
        if side % c == 0 {
            out.push(c);
        }
        c *= 2;
    }
    out
}

/// Mean/CI statistics of one (p, cluster side) sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub p: f64,
    pub cluster_side: u32,
    pub mean_throughput: f64,
    /// Half-width of the 95% confidence interval over runs.
    pub ci95: f64,
    /// Mean per-cluster entanglement passing rate.
    pub mean_passing_rate: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub side: u32,
    /// Points ordered by (p index, cluster-side index).
    pub points: Vec<SweepPoint>,
    pub p_values: Vec<f64>,
    pub cluster_sides: Vec<u32>,
}

impl SweepResult {
    pub fn point(&self, p_idx: usize, side_idx: usize) -> &SweepPoint {
        &self.points[p_idx * self.cluster_sides.len() + side_idx]
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "p,cluster_side,mean_throughput,ci95,mean_passing_rate")?;
        for pt in &self.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                pt.p, pt.cluster_side, pt.mean_throughput, pt.ci95, pt.mean_passing_rate
            )?;
        }
        Ok(())
    }
}

/// Sample mean and 95% CI half-width (normal approximation over runs).
pub fn mean_and_ci95(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

fn passing_rate_of_log(log: &MetricsLog) -> f64 {
    // Mean over clusters of their pooled per-run rate.
    let mut per_cluster: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for epoch in &log.epochs {
        for c in &epoch.clusters {
            let e = per_cluster.entry(c.cluster.0).or_default();
            e.0 += c.attempts;
            e.1 += c.passes;
        }
    }
    let rates: Vec<f64> = per_cluster
        .values()
        .filter(|(attempts, _)| *attempts > 0)
        .map(|(attempts, passes)| *passes as f64 / *attempts as f64)
        .collect();
    if rates.is_empty() {
        0.0
    } else {
        rates.iter().sum::<f64>() / rates.len() as f64
    }
}

/// Simulate every (p, cluster side) static configuration on the grid and
/// record mean throughput with a 95% CI plus mean passing rates.
pub fn sweep_static_grid(cfg: &GridSweepConfig, seed: u64) -> Result<SweepResult> {
    for c in &cfg.cluster_sides {
        if *c == 0 || cfg.side % c != 0 {
            return Err(Error::Domain(format!(
                "cluster side {c} does not divide grid side {}",
                cfg.side
            )));
        }
    }
    if cfg.p_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("p grid must be strictly increasing".into()));
    }
    let graph = make_grid(
        cfg.side,
        cfg.width,
        cfg.qubits_per_node,
        0.5,
        cfg.fusion_prob,
    )?;
    let mut points = Vec::new();
    for (pi, &p) in cfg.p_values.iter().enumerate() {
        let schedule = ParameterSchedule::new(vec![ScheduleEntry {
            start_slot: 0,
            overrides: Overrides {
                p: Some(p),
                q: Some(cfg.fusion_prob),
                ..Default::default()
            },
        }])?;
        for (si, &cluster_side) in cfg.cluster_sides.iter().enumerate() {
            let mut throughputs = Vec::with_capacity(cfg.runs as usize);
            let mut rates = Vec::with_capacity(cfg.runs as usize);
            for run in 0..cfg.runs {
                let mut run_seed_rng = rng::stream(
                    seed,
                    rng::STREAM_CALIBRATE,
                    (pi as u64) << 32 | si as u64,
                    run as u64,
                );
                let run_seed = rand::Rng::gen::<u64>(&mut run_seed_rng);
                let sim_cfg = SimConfig {
                    epoch_length: cfg.epoch_length,
                    queue_capacity: cfg.queue_capacity,
                    ..SimConfig::new(
                        cfg.slots_per_point,
                        run_seed,
                        ClusterMode::Static {
                            partition: StaticPartition::GridSquares {
                                side: cfg.side,
                                cluster_side,
                            },
                        },
                    )
                };
                let log = run_simulation(&graph, &schedule, sim_cfg)?;
                throughputs.push(log.throughput());
                rates.push(passing_rate_of_log(&log));
            }
            let (mean_throughput, ci95) = mean_and_ci95(&throughputs);
            let (mean_passing_rate, _) = mean_and_ci95(&rates);
            points.push(SweepPoint {
                p,
                cluster_side,
                mean_throughput,
                ci95,
                mean_passing_rate,
            });
        }
    }
    Ok(SweepResult {
        side: cfg.side,
        points,
        p_values: cfg.p_values.clone(),
        cluster_sides: cfg.cluster_sides.clone(),
    })
}

fn interp_points(points: &[(f64, f64)], size: f64) -> f64 {
    let first = points.first().expect("non-empty curve");
    let last = points.last().expect("non-empty curve");
    if size <= first.0 {
        return first.1;
    }
    if size >= last.0 {
        return last.1;
    }
    let hi = points
        .iter()
        .position(|(s, _)| *s >= size)
        .expect("bracket");
    let (s0, t0) = points[hi - 1];
    let (s1, t1) = points[hi];
    t0 + (size - s0) / (s1 - s0) * (t1 - t0)
}

/// Map the sweep's CI-separated argmax transitions to merge/split threshold
/// knots: at a crossing between cluster sizes `s_small < s_big`, the bigger
/// size gains a split knot at its passing rate and the smaller size gains a
/// merge knot at its own. Knot rates average the two bracketing p points.
///
/// Only transitions where the optimal configuration shrinks as p grows
/// count, and a transition must be CI-separated on both sides: scanning
/// outward from the crossing, each config must dominate the other with
/// non-overlapping 95% intervals somewhere on its side.
pub fn derive_2d_thresholds(sweep: &SweepResult) -> Result<ThresholdTable> {
    if sweep.cluster_sides.len() < 2 || sweep.p_values.len() < 2 {
        return Err(Error::CalibrationInconclusive(
            "sweep needs at least two configurations and two p values".into(),
        ));
    }
    let argmax = |pi: usize| -> usize {
        (0..sweep.cluster_sides.len())
            .max_by(|&a, &b| {
                sweep
                    .point(pi, a)
                    .mean_throughput
                    .total_cmp(&sweep.point(pi, b).mean_throughput)
            })
            .expect("non-empty configs")
    };
    let dominates = |pi: usize, winner: usize, loser: usize| -> bool {
        let w = sweep.point(pi, winner);
        let l = sweep.point(pi, loser);
        w.mean_throughput - w.ci95 > l.mean_throughput + l.ci95
    };
    let mut split_knots: BTreeMap<u64, f64> = BTreeMap::new();
    let mut merge_knots: BTreeMap<u64, f64> = BTreeMap::new();
    for pi in 0..sweep.p_values.len() - 1 {
        let big = argmax(pi);
        let small = argmax(pi + 1);
        // Real transitions hand over from larger to smaller clusters as p
        // increases; the reverse direction is noise among flat curves.
        if sweep.cluster_sides[big] <= sweep.cluster_sides[small] {
            continue;
        }
        let separated_left = (0..=pi).rev().any(|j| dominates(j, big, small));
        let separated_right = (pi + 1..sweep.p_values.len()).any(|j| dominates(j, small, big));
        if !(separated_left && separated_right) {
            continue;
        }
        let big_size = (sweep.cluster_sides[big] as u64).pow(2);
        let small_size = (sweep.cluster_sides[small] as u64).pow(2);
        let big_rate = 0.5
            * (sweep.point(pi, big).mean_passing_rate + sweep.point(pi + 1, big).mean_passing_rate);
        let small_rate = 0.5
            * (sweep.point(pi, small).mean_passing_rate
                + sweep.point(pi + 1, small).mean_passing_rate);
        // Later (higher-p) crossings win: they sit where throughput is
        // actually measurable.
        split_knots.insert(big_size, big_rate);
        merge_knots.insert(small_size, small_rate);
    }
    if split_knots.is_empty() || merge_knots.is_empty() {
        return Err(Error::CalibrationInconclusive(
            "no CI-separated crossing between static configurations".into(),
        ));
    }
    let split: Vec<(f64, f64)> = split_knots.iter().map(|(&s, &t)| (s as f64, t)).collect();
    let merge_raw: Vec<(f64, f64)> = merge_knots.iter().map(|(&s, &t)| (s as f64, t)).collect();
    // Clamp the merge curve under the split curve pointwise; knotting the
    // union of sizes keeps both curves linear between checks.
    let mut union_sizes: Vec<f64> = split
        .iter()
        .chain(merge_raw.iter())
        .map(|(s, _)| *s)
        .collect();
    union_sizes.sort_by(f64::total_cmp);
    union_sizes.dedup();
    let merge: Vec<(f64, f64)> = union_sizes
        .iter()
        .map(|&s| {
            (
                s,
                interp_points(&merge_raw, s).min(interp_points(&split, s)),
            )
        })
        .collect();
    ThresholdTable::new(vec![SizeTable {
        network_size: (sweep.side as u64).pow(2),
        split,
        merge,
    }])
}

/// Options for topology-specific threshold derivation.
#[derive(Clone, Debug)]
pub struct TopologyCalibConfig {
    pub bracket: (f64, f64),
    pub max_bisect: u32,
    pub runs: u32,
    pub slots_per_eval: u64,
    pub epoch_length: u64,
    pub queue_capacity: u32,
    pub fusion_prob: f64,
    /// Epochs with a stable cluster count to declare steady state.
    pub steady_epochs: u32,
    /// Relative cluster-count change (floored at one cluster) still
    /// considered stable; large networks never stop micro-churning.
    pub steady_tolerance: f64,
    /// Epochs of passing rates collected after steady state.
    pub collect_epochs: u32,
    pub max_epochs: u32,
}

impl Default for TopologyCalibConfig {
    fn default() -> Self {
        Self {
            bracket: (0.05, 0.95),
            max_bisect: 20,
            runs: 5,
            slots_per_eval: 1500,
            epoch_length: 500,
            queue_capacity: 10,
            fusion_prob: 0.9,
            steady_epochs: 3,
            steady_tolerance: 0.05,
            collect_epochs: 5,
            max_epochs: 60,
        }
    }
}

/// Result of [`derive_topology_thresholds`].
#[derive(Clone, Debug)]
pub struct TopologyThresholds {
    pub table: ThresholdTable,
    /// Critical mean channel probability where singleton clusters tie with
    /// adaptive clustering.
    pub p_star: f64,
    /// 75th-percentile steady-state passing rate (split cap).
    pub split_cap: f64,
    /// Mean singleton passing rate at `p_star` (merge cap).
    pub merge_cap: f64,
}

/// Derive topology-specific thresholds: locate the critical average channel
/// probability `p*` where static singleton clusters match adaptive routing
/// under `grid_table`, then cap the grid split thresholds at the
/// 75th-percentile steady-state passing rate at `p*` and the merge
/// thresholds at the singleton mean passing rate at `p*`.
pub fn derive_topology_thresholds(
    graph: &NetworkGraph,
    grid_table: &ThresholdTable,
    cfg: &TopologyCalibConfig,
    seed: u64,
) -> Result<TopologyThresholds> {
    let schedule_at = |e_p: f64| -> Result<ParameterSchedule> {
        ParameterSchedule::new(vec![ScheduleEntry {
            start_slot: 0,
            overrides: Overrides {
                e_p: Some(e_p),
                q: Some(cfg.fusion_prob),
                ..Default::default()
            },
        }])
    };
    let eval = |e_p: f64, adaptive: bool, salt: u64| -> Result<(f64, f64)> {
        let schedule = schedule_at(e_p)?;
        let mut samples = Vec::with_capacity(cfg.runs as usize);
        for run in 0..cfg.runs {
            let mut seed_rng = rng::stream(seed, rng::STREAM_CALIBRATE, salt, run as u64);
            let run_seed = rand::Rng::gen::<u64>(&mut seed_rng);
            let mode = if adaptive {
                ClusterMode::Adaptive {
                    thresholds: grid_table.clone(),
                }
            } else {
                ClusterMode::Static {
                    partition: StaticPartition::Singletons,
                }
            };
            let sim_cfg = SimConfig {
                epoch_length: cfg.epoch_length,
                queue_capacity: cfg.queue_capacity,
                ..SimConfig::new(cfg.slots_per_eval, run_seed, mode)
            };
            let log = run_simulation(graph, &schedule, sim_cfg)?;
            samples.push(log.throughput());
        }
        Ok(mean_and_ci95(&samples))
    };

    // Bisection on the throughput gap singleton - adaptive. Singletons win
    // at high p, adaptive wins at a low-but-alive p; below that both modes
    // starve and the gap is zero noise, so the low anchor is the first
    // ladder point whose gap is CI-significantly opposite to the top end.
    let (lo_edge, hi) = cfg.bracket;
    let gap = |e_p: f64, salt: u64| -> Result<(f64, f64, f64)> {
        let (st, sci) = eval(e_p, false, salt * 2)?;
        let (at, aci) = eval(e_p, true, salt * 2 + 1)?;
        Ok((st - at, sci, aci))
    };
    let (gap_hi, hi_sci, hi_aci) = gap(hi, 1001)?;
    if gap_hi.abs() <= hi_sci + hi_aci {
        return Err(Error::CalibrationInconclusive(format!(
            "throughput gap at the top of the bracket ({hi}) is not CI-significant"
        )));
    }
    let hi_sign = gap_hi.signum();
    let mut lo = None;
    for k in 0..10 {
        let p = lo_edge + (hi - lo_edge) * k as f64 / 10.0;
        let (g, sci, aci) = gap(p, 1100 + k as u64)?;
        if g.signum() != hi_sign && g.abs() > sci + aci {
            lo = Some(p);
            break;
        }
    }
    let Some(mut lo) = lo else {
        return Err(Error::CalibrationInconclusive(format!(
            "no CI-significant gap opposite to the top end within [{lo_edge}, {hi}]"
        )));
    };
    let mut hi = hi;
    let mut p_star = 0.5 * (lo + hi);
    for iter in 0..cfg.max_bisect {
        p_star = 0.5 * (lo + hi);
        let (g, sci, aci) = gap(p_star, 2000 + iter as u64)?;
        if g.abs() <= sci + aci {
            break;
        }
        if g.signum() == hi_sign {
            hi = p_star;
        } else {
            lo = p_star;
        }
    }

    // Steady-state passing rates of adaptive clustering at p*.
    let schedule = schedule_at(p_star)?;
    let mut seed_rng = rng::stream(seed, rng::STREAM_CALIBRATE, 3000, 0);
    let run_seed = rand::Rng::gen::<u64>(&mut seed_rng);
    let sim_cfg = SimConfig {
        epoch_length: cfg.epoch_length,
        queue_capacity: cfg.queue_capacity,
        // Driven epoch-by-epoch below; the slot budget is unused.
        ..SimConfig::new(
            0,
            run_seed,
            ClusterMode::Adaptive {
                thresholds: grid_table.clone(),
            },
        )
    };
    let mut sim = Simulation::new(graph, &schedule, sim_cfg)?;
    let mut last_count = sim.clustering().cluster_count();
    let mut stable = 0u32;
    let mut reached_steady = false;
    for _ in 0..cfg.max_epochs {
        sim.run_epoch()?;
        let count = sim.clustering().cluster_count();
        let band = (cfg.steady_tolerance * last_count as f64).max(1.0);
        if (count as f64 - last_count as f64).abs() <= band {
            stable += 1;
            if stable + 1 >= cfg.steady_epochs {
                reached_steady = true;
                break;
            }
        } else {
            stable = 0;
        }
        last_count = count;
    }
    if !reached_steady {
        return Err(Error::CalibrationInconclusive(format!(
            "clustering did not reach a steady state within {} epochs",
            cfg.max_epochs
        )));
    }
    let mut rates = Vec::new();
    for _ in 0..cfg.collect_epochs {
        let record = sim.run_epoch()?;
        for c in &record.clusters {
            if c.attempts > 0 {
                rates.push(c.passes as f64 / c.attempts as f64);
            }
        }
    }
    if rates.is_empty() {
        return Err(Error::CalibrationInconclusive(
            "no cluster attempts while collecting steady-state rates".into(),
        ));
    }
    rates.sort_by(|a, b| a.total_cmp(b));
    // Nearest-rank 75th percentile.
    let split_cap = rates[((0.75 * rates.len() as f64).ceil() as usize).clamp(1, rates.len()) - 1];

    // Singleton mean passing rate at p*.
    let mut seed_rng = rng::stream(seed, rng::STREAM_CALIBRATE, 4000, 0);
    let run_seed = rand::Rng::gen::<u64>(&mut seed_rng);
    let sim_cfg = SimConfig {
        epoch_length: cfg.epoch_length,
        queue_capacity: cfg.queue_capacity,
        ..SimConfig::new(
            cfg.slots_per_eval,
            run_seed,
            ClusterMode::Static {
                partition: StaticPartition::Singletons,
            },
        )
    };
    let log = run_simulation(graph, &schedule, sim_cfg)?;
    let merge_cap = passing_rate_of_log(&log);

    let tables: Vec<SizeTable> = grid_table
        .tables()
        .iter()
        .map(|t| {
            let split: Vec<(f64, f64)> = t
                .split
                .iter()
                .map(|&(s, thr)| (s, thr.min(split_cap)))
                .collect();
            SizeTable {
                network_size: t.network_size,
                merge: t
                    .merge
                    .iter()
                    .map(|&(s, thr)| (s, thr.min(merge_cap).min(interp_points(&split, s))))
                    .collect(),
                split,
            }
        })
        .collect();
    Ok(TopologyThresholds {
        table: ThresholdTable::new(tables)?,
        p_star,
        split_cap,
        merge_cap,
    })
}
