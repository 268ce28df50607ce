use std::collections::BTreeMap;

use rand::Rng;

use crate::cluster::Clustering;
use crate::topo::{Channel, NetworkGraph, NodeId, QubitCapacity};

use super::ClusterPath;

/// Qubit-to-channel assignment for one serviced path. `assigned` preserves
/// the priority order in which channels received qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitAssignment {
    pub assigned: Vec<Channel>,
    /// Remaining capacity of every node incident to the candidate edge set
    /// (`None` marks unlimited nodes).
    pub remaining_capacity: BTreeMap<NodeId, QubitCapacity>,
}

/// Assign qubits to channels across the path's edge set.
///
/// The candidate set contains every edge whose endpoints both lie in path
/// clusters, within a cluster or between any two of them; with
/// `consecutive_only` the inter-cluster edges are restricted to consecutive
/// path clusters. Each edge draws a priority in [0,1); channel `i` of an
/// edge gets priority `a + i`, and channels are served in ascending
/// priority while both endpoints still have free qubits.
pub fn assign_qubits(
    graph: &NetworkGraph,
    clustering: &Clustering,
    path: &ClusterPath,
    consecutive_only: bool,
    rng: &mut impl Rng,
) -> QubitAssignment {
    let mut position: BTreeMap<_, usize> = BTreeMap::new();
    for (i, c) in path.clusters.iter().enumerate() {
        position.insert(*c, i);
    }
    let mut edges = Vec::new();
    for e in graph.edges() {
        let pu = position.get(&clustering.cluster_of(e.endpoints.0));
        let pv = position.get(&clustering.cluster_of(e.endpoints.1));
        let (Some(&pu), Some(&pv)) = (pu, pv) else {
            continue;
        };
        if consecutive_only && pu.abs_diff(pv) > 1 {
            continue;
        }
        edges.push(e.id);
    }

    // Per-edge priorities are drawn in ascending edge-id order so the
    // outcome is a pure function of the RNG stream.
    let mut channels: Vec<(f64, Channel)> = Vec::new();
    let mut remaining: BTreeMap<NodeId, QubitCapacity> = BTreeMap::new();
    for eid in edges {
        let priority: f64 = rng.gen();
        let e = graph.edge(eid);
        for i in 0..e.width() {
            channels.push((
                priority + i as f64,
                Channel {
                    edge: eid,
                    index: i,
                },
            ));
        }
        for n in [e.endpoints.0, e.endpoints.1] {
            remaining
                .entry(n)
                .or_insert_with(|| graph.node(n).qubit_capacity);
        }
    }
    channels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut assigned = Vec::new();
    for (_, ch) in channels {
        let (u, v) = graph.edge(ch.edge).endpoints;
        let free = |cap: &QubitCapacity| cap.is_none_or(|c| c > 0);
        if free(&remaining[&u]) && free(&remaining[&v]) {
            for n in [u, v] {
                if let Some(Some(c)) = remaining.get_mut(&n).map(|c| c.as_mut()) {
                    *c -= 1;
                }
            }
            assigned.push(ch);
        }
    }
    QubitAssignment {
        assigned,
        remaining_capacity: remaining,
    }
}
