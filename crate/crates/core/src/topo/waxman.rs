use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

use super::{calibrate_alpha, Edge, EdgeId, NetworkGraph, Node, NodeId};

/// Parameters for the Waxman random-topology generator.
///
/// Connection probability between nodes at distance `d` is
/// `scale * beta_w * exp(-d / (alpha_w * d_max))`, where `scale` is tuned by
/// bisection on the analytic expectation so the expected average degree hits
/// `target_avg_degree`. Draws are rejected until the realized average degree
/// is within `degree_tolerance` of the target and the graph is connected.
#[derive(Clone, Debug)]
pub struct WaxmanConfig {
    pub nodes: u32,
    pub target_avg_degree: f64,
    pub qubit_range: (u32, u32),
    pub width_range: (u32, u32),
    /// Target mean channel probability (E_p); channel probabilities are
    /// derived from edge lengths via `calibrate_alpha`.
    pub mean_channel_prob: f64,
    pub fusion_prob: f64,
    pub alpha_w: f64,
    pub beta_w: f64,
    pub degree_tolerance: f64,
    pub max_redraws: u32,
}

impl WaxmanConfig {
    pub fn new(nodes: u32, target_avg_degree: f64) -> Self {
        Self {
            nodes,
            target_avg_degree,
            qubit_range: (10, 14),
            width_range: (3, 7),
            mean_channel_prob: 0.6,
            fusion_prob: 0.9,
            alpha_w: 0.4,
            beta_w: 0.4,
            degree_tolerance: 0.05,
            max_redraws: 100,
        }
    }
}

/// Generate a connected Waxman topology with the given seed.
pub fn make_waxman(cfg: &WaxmanConfig, seed: u64) -> Result<NetworkGraph> {
    let n = cfg.nodes as usize;
    if n < 2 {
        return Err(Error::InvalidTopology(format!(
            "waxman topology needs at least 2 nodes, got {n}"
        )));
    }
    if cfg.target_avg_degree <= 0.0 || cfg.target_avg_degree > (n - 1) as f64 {
        return Err(Error::CalibrationFailure(format!(
            "average degree {} unattainable with {} nodes",
            cfg.target_avg_degree, n
        )));
    }
    if cfg.qubit_range.0 > cfg.qubit_range.1 || cfg.width_range.0 > cfg.width_range.1 {
        return Err(Error::InvalidTopology("empty qubit or width range".into()));
    }
    if cfg.width_range.0 < 1 {
        return Err(Error::InvalidTopology(
            "edge width must be at least 1".into(),
        ));
    }

    let mut placement_rng = rng::stream(seed, rng::STREAM_TOPOLOGY, 0, 0);
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|_| (placement_rng.gen::<f64>(), placement_rng.gen::<f64>()))
        .collect();

    let mut d_max = 0.0_f64;
    let mut dist = vec![0.0_f64; n * n];
    for u in 0..n {
        for v in (u + 1)..n {
            let dx = positions[u].0 - positions[v].0;
            let dy = positions[u].1 - positions[v].1;
            let d = (dx * dx + dy * dy).sqrt();
            dist[u * n + v] = d;
            d_max = d_max.max(d);
        }
    }
    if d_max == 0.0 {
        return Err(Error::InvalidTopology("all nodes coincide".into()));
    }

    // Pair weights before the tuned scale factor.
    let weight = |u: usize, v: usize| -> f64 {
        cfg.beta_w * (-dist[u * n + v] / (cfg.alpha_w * d_max)).exp()
    };
    let expected_degree = |scale: f64| -> f64 {
        let mut sum = 0.0;
        for u in 0..n {
            for v in (u + 1)..n {
                sum += (scale * weight(u, v)).min(1.0);
            }
        }
        2.0 * sum / n as f64
    };

    // Bisection on the scale factor against the analytic expectation.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while expected_degree(hi) < cfg.target_avg_degree {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::CalibrationFailure(
                "degree target unreachable even with saturated probabilities".into(),
            ));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected_degree(mid) < cfg.target_avg_degree {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);

    for attempt in 0..cfg.max_redraws {
        let mut draw_rng = rng::stream(seed, rng::STREAM_TOPOLOGY, 1, attempt as u64);
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if draw_rng.gen::<f64>() < (scale * weight(u, v)).min(1.0) {
                    pairs.push((u, v));
                }
            }
        }
        let avg_degree = 2.0 * pairs.len() as f64 / n as f64;
        if (avg_degree - cfg.target_avg_degree).abs() > cfg.degree_tolerance * cfg.target_avg_degree
        {
            continue;
        }
        if !pairs_connected(n, &pairs) {
            continue;
        }

        let mut attr_rng = rng::stream(seed, rng::STREAM_TOPOLOGY, 2, attempt as u64);
        let nodes: Vec<Node> = (0..n)
            .map(|i| Node {
                id: NodeId(i as u32),
                x: positions[i].0,
                y: positions[i].1,
                qubit_capacity: Some(attr_rng.gen_range(cfg.qubit_range.0..=cfg.qubit_range.1)),
                fusion_prob: cfg.fusion_prob,
            })
            .collect();
        let edges: Vec<Edge> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| {
                let width = attr_rng.gen_range(cfg.width_range.0..=cfg.width_range.1);
                Edge {
                    id: EdgeId(i as u32),
                    endpoints: (NodeId(u as u32), NodeId(v as u32)),
                    length: dist[u * n + v],
                    channel_probs: vec![0.0; width as usize],
                }
            })
            .collect();
        let mut graph = NetworkGraph::new(nodes, edges)?;
        calibrate_alpha(&mut graph, cfg.mean_channel_prob)?;
        return Ok(graph);
    }
    Err(Error::CalibrationFailure(format!(
        "no connected draw within degree tolerance after {} attempts",
        cfg.max_redraws
    )))
}

fn pairs_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in pairs {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}
