//! Network graph model and topology generators.
//!
//! A network is a simple graph of nodes with memory-qubit capacities and a
//! fusion success probability, and edges carrying one or more quantum
//! channels. Channel multiplicity is expressed by the edge width; every
//! channel has its own entanglement-generation success probability.

mod grid;
pub mod json;
mod schedule;
mod waxman;

pub use grid::make_grid;
pub use schedule::{
    apply_schedule, EffectiveParams, Overrides, ParameterSchedule, Rect, RegionOverride,
    ScheduleEntry,
};
pub use waxman::{make_waxman, WaxmanConfig};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One entanglement-generation resource: channel `index` of edge `edge`.
///
/// The ordering is lexicographic by `(edge, index)`, which is the
/// "lowest id" order used by the fusion protocol.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Channel {
    pub edge: EdgeId,
    pub index: u32,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}c{}", self.edge, self.index)
    }
}

/// Memory-qubit budget of a node; `None` means unlimited.
pub type QubitCapacity = Option<u32>;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub qubit_capacity: QubitCapacity,
    pub fusion_prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub endpoints: (NodeId, NodeId),
    pub length: f64,
    /// Per-channel success probabilities; the edge width is the length of
    /// this vector.
    pub channel_probs: Vec<f64>,
}

impl Edge {
    pub fn width(&self) -> u32 {
        self.channel_probs.len() as u32
    }

    /// The endpoint opposite to `n`.
    pub fn other(&self, n: NodeId) -> NodeId {
        if self.endpoints.0 == n {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn is_incident(&self, n: NodeId) -> bool {
        self.endpoints.0 == n || self.endpoints.1 == n
    }
}

/// Simple undirected multigraph: at most one edge per node pair, with
/// channel multiplicity carried by edge widths. Immutable after
/// construction except for channel-probability recalibration.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl NetworkGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(Error::InvalidTopology(format!(
                    "node ids must be contiguous from 0; found {} at position {i}",
                    n.id
                )));
            }
            if !(0.0..=1.0).contains(&n.fusion_prob) {
                return Err(Error::InvalidTopology(format!(
                    "fusion probability of node {} out of [0,1]",
                    n.id
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen_pairs = std::collections::BTreeSet::new();
        for (i, e) in edges.iter().enumerate() {
            if e.id.index() != i {
                return Err(Error::InvalidTopology(format!(
                    "edge ids must be contiguous from 0; found {} at position {i}",
                    e.id
                )));
            }
            let (u, v) = e.endpoints;
            if u == v {
                return Err(Error::InvalidTopology(format!(
                    "edge {} is a self-loop",
                    e.id
                )));
            }
            if u.index() >= nodes.len() || v.index() >= nodes.len() {
                return Err(Error::InvalidTopology(format!(
                    "edge {} references a missing node",
                    e.id
                )));
            }
            let key = (u.min(v), u.max(v));
            if !seen_pairs.insert(key) {
                return Err(Error::InvalidTopology(format!(
                    "duplicate edge between {} and {}",
                    key.0, key.1
                )));
            }
            if e.channel_probs.is_empty() {
                return Err(Error::InvalidTopology(format!("edge {} has width 0", e.id)));
            }
            if e.channel_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidTopology(format!(
                    "edge {} has a channel probability out of [0,1]",
                    e.id
                )));
            }
            if !e.length.is_finite() || e.length <= 0.0 {
                return Err(Error::InvalidTopology(format!(
                    "edge {} has non-positive length",
                    e.id
                )));
            }
            adjacency[u.index()].push(e.id);
            adjacency[v.index()].push(e.id);
        }
        Ok(Self {
            nodes,
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn incident_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.adjacency[n.index()]
    }

    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[n.index()]
            .iter()
            .map(move |e| self.edge(*e).other(n))
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adjacency[n.index()].len()
    }

    /// The edge joining `u` and `v`, if any.
    pub fn edge_between(&self, u: NodeId, v: NodeId) -> Option<EdgeId> {
        self.adjacency[u.index()]
            .iter()
            .copied()
            .find(|e| self.edge(*e).other(u) == v)
    }

    pub fn total_channels(&self) -> u64 {
        self.edges.iter().map(|e| e.width() as u64).sum()
    }

    /// Mean success probability over all channels.
    pub fn mean_channel_prob(&self) -> f64 {
        let total: f64 = self
            .edges
            .iter()
            .map(|e| e.channel_probs.iter().sum::<f64>())
            .sum();
        total / self.total_channels() as f64
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![NodeId(0)];
        seen[0] = true;
        let mut count = 1;
        while let Some(n) = stack.pop() {
            for m in self.neighbors(n) {
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    count += 1;
                    stack.push(m);
                }
            }
        }
        count == self.nodes.len()
    }

    pub(crate) fn set_uniform_channel_probs_from_alpha(&mut self, alpha: f64) {
        for e in &mut self.edges {
            let p = (-alpha * e.length).exp();
            for c in &mut e.channel_probs {
                *c = p;
            }
        }
    }
}

/// Solve for the decay constant `alpha` such that the channel-weighted mean
/// of `exp(-alpha * length)` over all edges equals `mean_prob`, without
/// modifying the graph. Monotone bisection to residual < 1e-9.
pub fn solve_alpha(graph: &NetworkGraph, mean_prob: f64) -> Result<f64> {
    if !(mean_prob > 0.0 && mean_prob < 1.0) {
        return Err(Error::Domain(format!(
            "mean channel probability must lie in (0,1), got {mean_prob}"
        )));
    }
    if graph.edge_count() == 0 {
        return Err(Error::Domain("graph has no edges".into()));
    }
    let total = graph.total_channels() as f64;
    let mean_at = |alpha: f64| -> f64 {
        graph
            .edges()
            .iter()
            .map(|e| e.width() as f64 * (-alpha * e.length).exp())
            .sum::<f64>()
            / total
    };
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while mean_at(hi) > mean_prob {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::CalibrationFailure(
                "alpha bisection failed to bracket the target".into(),
            ));
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    for _ in 0..200 {
        alpha = 0.5 * (lo + hi);
        let m = mean_at(alpha);
        if (m - mean_prob).abs() < 1e-12 {
            break;
        }
        if m > mean_prob {
            lo = alpha;
        } else {
            hi = alpha;
        }
    }
    if (mean_at(alpha) - mean_prob).abs() > 1e-9 {
        return Err(Error::CalibrationFailure(format!(
            "alpha bisection residual {} exceeds 1e-9",
            (mean_at(alpha) - mean_prob).abs()
        )));
    }
    Ok(alpha)
}

/// Solve for `alpha` as in [`solve_alpha`] and assign every channel its
/// length-derived probability `exp(-alpha * length)`.
pub fn calibrate_alpha(graph: &mut NetworkGraph, mean_prob: f64) -> Result<f64> {
    let alpha = solve_alpha(graph, mean_prob)?;
    graph.set_uniform_channel_probs_from_alpha(alpha);
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_edge_graph(lengths: [f64; 2]) -> NetworkGraph {
        let nodes = (0..3)
            .map(|i| Node {
                id: NodeId(i),
                x: i as f64,
                y: 0.0,
                qubit_capacity: Some(4),
                fusion_prob: 0.9,
            })
            .collect();
        let edges = vec![
            Edge {
                id: EdgeId(0),
                endpoints: (NodeId(0), NodeId(1)),
                length: lengths[0],
                channel_probs: vec![0.5],
            },
            Edge {
                id: EdgeId(1),
                endpoints: (NodeId(1), NodeId(2)),
                length: lengths[1],
                channel_probs: vec![0.5],
            },
        ];
        NetworkGraph::new(nodes, edges).unwrap()
    }

    #[test]
    fn alpha_closed_form_for_equal_lengths() {
        let mut g = two_edge_graph([2.0, 2.0]);
        let alpha = calibrate_alpha(&mut g, 0.5).unwrap();
        assert!((alpha - (2.0_f64.ln() / 2.0)).abs() < 1e-9);
        assert!((g.mean_channel_prob() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn alpha_bisection_matches_substitution() {
        let mut g = two_edge_graph([1.0, 2.0]);
        let alpha = calibrate_alpha(&mut g, 0.6).unwrap();
        let mean = 0.5 * ((-alpha).exp() + (-2.0 * alpha).exp());
        assert!((mean - 0.6).abs() < 1e-9);
        assert!((g.mean_channel_prob() - 0.6).abs() < 1e-9);
    }

    #[test]
    fn alpha_high_target_keeps_channels_high() {
        let mut g = two_edge_graph([1.0, 2.0]);
        calibrate_alpha(&mut g, 0.99).unwrap();
        for e in g.edges() {
            for p in &e.channel_probs {
                assert!(*p >= 0.98);
            }
        }
    }

    #[test]
    fn alpha_early_break_returns_the_validated_point() {
        // Regression: the tolerance break must yield the midpoint it
        // validated, not the bracket center a half-interval away (which
        // left a 1.5e-9 residual on this instance).
        let lengths = [7.162752800843761, 20.568329673542593, 22.536641864605492];
        let widths = [4usize, 3, 1];
        let nodes = (0..4)
            .map(|i| Node {
                id: NodeId(i),
                x: i as f64,
                y: 0.0,
                qubit_capacity: None,
                fusion_prob: 1.0,
            })
            .collect();
        let edges = lengths
            .iter()
            .enumerate()
            .map(|(i, &len)| Edge {
                id: EdgeId(i as u32),
                endpoints: (NodeId(i as u32), NodeId(i as u32 + 1)),
                length: len,
                channel_probs: vec![0.0; widths[i]],
            })
            .collect();
        let mut g = NetworkGraph::new(nodes, edges).unwrap();
        calibrate_alpha(&mut g, 0.5552695424421998).unwrap();
        assert!((g.mean_channel_prob() - 0.5552695424421998).abs() < 1e-9);
    }

    #[test]
    fn alpha_rejects_out_of_domain_targets() {
        let g = two_edge_graph([1.0, 2.0]);
        assert!(matches!(solve_alpha(&g, 0.0), Err(Error::Domain(_))));
        assert!(matches!(solve_alpha(&g, 1.0), Err(Error::Domain(_))));
    }

    proptest::proptest! {
        /// Calibration hits the requested mean channel probability to 1e-9
        /// for arbitrary length/width mixes.
        #[test]
        fn calibration_hits_mean(
            lengths in proptest::collection::vec(0.1f64..50.0, 1..12),
            widths in proptest::collection::vec(1u32..5, 12),
            target in 0.01f64..0.99,
        ) {
            let nodes = (0..lengths.len() as u32 + 1)
                .map(|i| Node {
                    id: NodeId(i),
                    x: i as f64,
                    y: 0.0,
                    qubit_capacity: None,
                    fusion_prob: 1.0,
                })
                .collect();
            let edges = lengths
                .iter()
                .enumerate()
                .map(|(i, &len)| Edge {
                    id: EdgeId(i as u32),
                    endpoints: (NodeId(i as u32), NodeId(i as u32 + 1)),
                    length: len,
                    channel_probs: vec![0.0; widths[i] as usize],
                })
                .collect();
            let mut g = NetworkGraph::new(nodes, edges).unwrap();
            calibrate_alpha(&mut g, target).unwrap();
            proptest::prop_assert!((g.mean_channel_prob() - target).abs() < 1e-9);
            for e in g.edges() {
                for p in &e.channel_probs {
                    proptest::prop_assert!((0.0..=1.0).contains(p));
                }
            }
        }
    }

    #[test]
    fn rejects_duplicate_edges_and_self_loops() {
        let nodes: Vec<Node> = (0..2)
            .map(|i| Node {
                id: NodeId(i),
                x: 0.0,
                y: 0.0,
                qubit_capacity: None,
                fusion_prob: 1.0,
            })
            .collect();
        let dup = vec![
            Edge {
                id: EdgeId(0),
                endpoints: (NodeId(0), NodeId(1)),
                length: 1.0,
                channel_probs: vec![1.0],
            },
            Edge {
                id: EdgeId(1),
                endpoints: (NodeId(1), NodeId(0)),
                length: 1.0,
                channel_probs: vec![1.0],
            },
        ];
        assert!(NetworkGraph::new(nodes.clone(), dup).is_err());

        let loop_edge = vec![Edge {
            id: EdgeId(0),
            endpoints: (NodeId(0), NodeId(0)),
            length: 1.0,
            channel_probs: vec![1.0],
        }];
        assert!(NetworkGraph::new(nodes, loop_edge).is_err());
    }
}
