use crate::error::{Error, Result};

use super::{Edge, EdgeId, NetworkGraph, Node, NodeId, QubitCapacity};

/// Build a `side`x`side` 4-neighbor grid with unit edge lengths, `width`
/// channels per edge all at probability `p`, and every node given the same
/// qubit capacity and fusion probability `q`.
///
/// Node `r*side + c` sits at position `(c, r)`.
pub fn make_grid(
    side: u32,
    width: u32,
    qubits_per_node: QubitCapacity,
    p: f64,
    q: f64,
) -> Result<NetworkGraph> {
    if side < 2 {
        return Err(Error::InvalidTopology(format!(
            "grid side must be at least 2, got {side}"
        )));
    }
    if width < 1 {
        return Err(Error::InvalidTopology(
            "edge width must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidTopology(
            "channel and fusion probabilities must lie in [0,1]".into(),
        ));
    }
    let mut nodes = Vec::with_capacity((side * side) as usize);
    for r in 0..side {
        for c in 0..side {
            nodes.push(Node {
                id: NodeId(r * side + c),
                x: c as f64,
                y: r as f64,
                qubit_capacity: qubits_per_node,
                fusion_prob: q,
            });
        }
    }
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let here = NodeId(r * side + c);
            if c + 1 < side {
                edges.push(Edge {
                    id: EdgeId(edges.len() as u32),
                    endpoints: (here, NodeId(r * side + c + 1)),
                    length: 1.0,
                    channel_probs: vec![p; width as usize],
                });
            }
            if r + 1 < side {
                edges.push(Edge {
                    id: EdgeId(edges.len() as u32),
                    endpoints: (here, NodeId((r + 1) * side + c)),
                    length: 1.0,
                    channel_probs: vec![p; width as usize],
                });
            }
        }
    }
    NetworkGraph::new(nodes, edges)
}
