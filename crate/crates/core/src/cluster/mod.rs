//! Cluster partition maintenance: Girvan-Newman splitting, Kemeny-constant
//! merge selection, threshold tables, and the per-epoch reconfiguration
//! step that drives adaptation.

mod betweenness;
mod girvan_newman;
mod kemeny;
mod reconfigure;
mod thresholds;

pub use betweenness::edge_betweenness;
pub use girvan_newman::girvan_newman;
pub use kemeny::kemeny_constant;
pub use reconfigure::reconfigure;
pub use thresholds::{builtin_2d, SizeTable, ThresholdTable, Thresholds};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topo::{EdgeId, NetworkGraph, NodeId};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterId(pub u32);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-epoch service counters of one cluster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub attempts: u64,
    pub passes: u64,
}

impl ClusterStats {
    /// Entanglement passing rate; defined only when there were attempts.
    pub fn rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.passes as f64 / self.attempts as f64)
    }
}

/// Reconfiguration constants: the Girvan-Newman split arity and the epoch
/// length in slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconfigConfig {
    pub split_arity: u32,
    pub epoch_length: u64,
}

impl Default for ReconfigConfig {
    fn default() -> Self {
        Self {
            split_arity: 4,
            epoch_length: 500,
        }
    }
}

/// A partition of the network's nodes into connected clusters, plus the
/// induced cluster adjacency (channel counts between cluster pairs).
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    clusters: BTreeMap<ClusterId, BTreeSet<NodeId>>,
    node_of: Vec<ClusterId>,
    adjacency: BTreeMap<(ClusterId, ClusterId), u32>,
    next_id: u32,
}

impl Clustering {
    /// One cluster holding the whole network.
    pub fn single(graph: &NetworkGraph) -> Self {
        let all: BTreeSet<NodeId> = graph.nodes().iter().map(|n| n.id).collect();
        Self::from_connected_sets(graph, vec![all], 0)
    }

    /// Every node its own cluster.
    pub fn singletons(graph: &NetworkGraph) -> Self {
        let sets = graph
            .nodes()
            .iter()
            .map(|n| BTreeSet::from([n.id]))
            .collect();
        Self::from_connected_sets(graph, sets, 0)
    }

    /// Square blocks of side `cluster_side` on a `side`x`side` grid whose
    /// node ids follow row-major order.
    pub fn grid_squares(graph: &NetworkGraph, side: u32, cluster_side: u32) -> Result<Self> {
        if cluster_side == 0 || side % cluster_side != 0 {
            return Err(Error::Domain(format!(
                "cluster side {cluster_side} does not divide grid side {side}"
            )));
        }
        if graph.node_count() != (side * side) as usize {
            return Err(Error::Domain(format!(
                "graph has {} nodes, expected {}",
                graph.node_count(),
                side * side
            )));
        }
        let blocks = side / cluster_side;
        let mut sets = vec![BTreeSet::new(); (blocks * blocks) as usize];
        for r in 0..side {
            for c in 0..side {
                let block = (r / cluster_side) * blocks + (c / cluster_side);
                sets[block as usize].insert(NodeId(r * side + c));
            }
        }
        Ok(Self::from_connected_sets(graph, sets, 0))
    }

    /// Build from an explicit partition, validating coverage and
    /// connectivity of every part.
    pub fn from_partition(graph: &NetworkGraph, parts: Vec<BTreeSet<NodeId>>) -> Result<Self> {
        let mut seen = vec![false; graph.node_count()];
        for part in &parts {
            if part.is_empty() {
                return Err(Error::InvalidConfig("empty cluster in partition".into()));
            }
            for n in part {
                if n.index() >= seen.len() {
                    return Err(Error::InvalidConfig(format!(
                        "unknown node {n} in partition"
                    )));
                }
                if seen[n.index()] {
                    return Err(Error::InvalidConfig(format!(
                        "node {n} appears in two clusters"
                    )));
                }
                seen[n.index()] = true;
            }
            if !set_connected(graph, part) {
                return Err(Error::InvalidConfig(
                    "cluster members must induce a connected subgraph".into(),
                ));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig(
                "partition does not cover every node".into(),
            ));
        }
        Ok(Self::from_connected_sets(graph, parts, 0))
    }

    /// Internal constructor; parts must partition V into connected sets.
    pub(crate) fn from_connected_sets(
        graph: &NetworkGraph,
        parts: Vec<BTreeSet<NodeId>>,
        first_id: u32,
    ) -> Self {
        let mut clusters = BTreeMap::new();
        let mut node_of = vec![ClusterId(0); graph.node_count()];
        let mut next_id = first_id;
        for part in parts {
            let id = ClusterId(next_id);
            next_id += 1;
            for n in &part {
                node_of[n.index()] = id;
            }
            clusters.insert(id, part);
        }
        let adjacency = cluster_adjacency(graph, &node_of);
        Self {
            clusters,
            node_of,
            adjacency,
            next_id,
        }
    }

    pub(crate) fn from_cluster_map(
        graph: &NetworkGraph,
        map: BTreeMap<ClusterId, BTreeSet<NodeId>>,
        next_id: u32,
    ) -> Self {
        let mut node_of = vec![ClusterId(0); graph.node_count()];
        for (id, part) in &map {
            for n in part {
                node_of[n.index()] = *id;
            }
        }
        let adjacency = cluster_adjacency(graph, &node_of);
        Self {
            clusters: map,
            node_of,
            adjacency,
            next_id,
        }
    }

    pub fn cluster_ids(&self) -> impl Iterator<Item = ClusterId> + '_ {
        self.clusters.keys().copied()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn members(&self, id: ClusterId) -> &BTreeSet<NodeId> {
        &self.clusters[&id]
    }

    pub fn size(&self, id: ClusterId) -> usize {
        self.clusters[&id].len()
    }

    pub fn cluster_of(&self, node: NodeId) -> ClusterId {
        self.node_of[node.index()]
    }

    pub(crate) fn clusters(&self) -> &BTreeMap<ClusterId, BTreeSet<NodeId>> {
        &self.clusters
    }

    pub(crate) fn next_id(&self) -> u32 {
        self.next_id
    }

    /// Number of channels (summed edge widths) between two clusters.
    pub fn channels_between(&self, a: ClusterId, b: ClusterId) -> u32 {
        let key = (a.min(b), a.max(b));
        self.adjacency.get(&key).copied().unwrap_or(0)
    }

    pub fn adjacency(&self) -> &BTreeMap<(ClusterId, ClusterId), u32> {
        &self.adjacency
    }

    pub fn neighbors(&self, id: ClusterId) -> Vec<ClusterId> {
        let mut out = Vec::new();
        for (a, b) in self.adjacency.keys() {
            if *a == id {
                out.push(*b);
            } else if *b == id {
                out.push(*a);
            }
        }
        out
    }

    /// Multiset of cluster sizes, sorted ascending.
    pub fn size_profile(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.clusters.values().map(|m| m.len()).collect();
        sizes.sort_unstable();
        sizes
    }

    /// Export the node-to-cluster assignment as CSV (`node_id,cluster_id`).
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "node_id,cluster_id")?;
        for (i, c) in self.node_of.iter().enumerate() {
            writeln!(out, "{i},{c}")?;
        }
        Ok(())
    }
}

fn cluster_adjacency(
    graph: &NetworkGraph,
    node_of: &[ClusterId],
) -> BTreeMap<(ClusterId, ClusterId), u32> {
    let mut adjacency = BTreeMap::new();
    for e in graph.edges() {
        let cu = node_of[e.endpoints.0.index()];
        let cv = node_of[e.endpoints.1.index()];
        if cu != cv {
            *adjacency.entry((cu.min(cv), cu.max(cv))).or_insert(0) += e.width();
        }
    }
    adjacency
}

pub(crate) fn set_connected(graph: &NetworkGraph, members: &BTreeSet<NodeId>) -> bool {
    let Some(&start) = members.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        for m in graph.neighbors(n) {
            if members.contains(&m) && seen.insert(m) {
                stack.push(m);
            }
        }
    }
    seen.len() == members.len()
}

/// Node-induced subgraph used by the community-detection primitives.
/// Edges are simple with unit length; widths do not contribute.
#[derive(Clone, Debug)]
pub struct InducedSubgraph<'g> {
    graph: &'g NetworkGraph,
    nodes: Vec<NodeId>,
    edges: Vec<(usize, usize, EdgeId)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl<'g> InducedSubgraph<'g> {
    pub fn new(graph: &'g NetworkGraph, members: &BTreeSet<NodeId>) -> Self {
        let nodes: Vec<NodeId> = members.iter().copied().collect();
        let local = |n: NodeId| nodes.binary_search(&n).ok();
        let mut edges = Vec::new();
        let mut adj = vec![Vec::new(); nodes.len()];
        for (u_local, &u) in nodes.iter().enumerate() {
            for eid in graph.incident_edges(u) {
                let v = graph.edge(*eid).other(u);
                if v <= u {
                    continue;
                }
                if let Some(v_local) = local(v) {
                    let idx = edges.len();
                    edges.push((u_local, v_local, *eid));
                    adj[u_local].push((v_local, idx));
                    adj[v_local].push((u_local, idx));
                }
            }
        }
        Self {
            graph,
            nodes,
            edges,
            adj,
        }
    }

    pub fn network(&self) -> &'g NetworkGraph {
        self.graph
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Edges as (local u, local v, network edge id).
    pub fn edges(&self) -> &[(usize, usize, EdgeId)] {
        &self.edges
    }

    /// Local adjacency: (neighbor local index, local edge index).
    pub fn adj(&self, local: usize) -> &[(usize, usize)] {
        &self.adj[local]
    }

    pub fn degree(&self, local: usize) -> usize {
        self.adj[local].len()
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.nodes.len()
    }
}
