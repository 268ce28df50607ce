//! JSON serialization of topologies and their parameter schedules.
//!
//! Document shape:
//!
//! ```json
//! {
//!   "nodes": [{"id": 0, "x": 0.0, "y": 0.0, "qubits": 4, "q": 0.9}],
//!   "edges": [{"id": 0, "u": 0, "v": 1, "length": 1.0, "width": 2, "p": [0.9, 0.9]}],
//!   "schedule": [{"start_slot": 0, "p": 0.6}]
//! }
//! ```
//!
//! `qubits: null` marks an unlimited node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Edge, EdgeId, NetworkGraph, Node, NodeId, ParameterSchedule, ScheduleEntry};

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: u32,
    x: f64,
    y: f64,
    qubits: Option<u32>,
    q: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    id: u32,
    u: u32,
    v: u32,
    length: f64,
    width: u32,
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DocumentJson {
    nodes: Vec<NodeJson>,
    edges: Vec<EdgeJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schedule: Option<Vec<ScheduleEntry>>,
}

/// Serialize a topology (and optional schedule) to a JSON string.
pub fn to_json(graph: &NetworkGraph, schedule: Option<&ParameterSchedule>) -> String {
    let doc = DocumentJson {
        nodes: graph
            .nodes()
            .iter()
            .map(|n| NodeJson {
                id: n.id.0,
                x: n.x,
                y: n.y,
                qubits: n.qubit_capacity,
                q: n.fusion_prob,
            })
            .collect(),
        edges: graph
            .edges()
            .iter()
            .map(|e| EdgeJson {
                id: e.id.0,
                u: e.endpoints.0 .0,
                v: e.endpoints.1 .0,
                length: e.length,
                width: e.width(),
                p: e.channel_probs.clone(),
            })
            .collect(),
        schedule: schedule.map(|s| s.entries().to_vec()),
    };
    serde_json::to_string_pretty(&doc).expect("topology document serializes")
}

/// Parse a topology document produced by [`to_json`].
pub fn from_json(text: &str) -> Result<(NetworkGraph, Option<ParameterSchedule>)> {
    let doc: DocumentJson = serde_json::from_str(text)?;
    let mut nodes: Vec<Node> = doc
        .nodes
        .into_iter()
        .map(|n| Node {
            id: NodeId(n.id),
            x: n.x,
            y: n.y,
            qubit_capacity: n.qubits,
            fusion_prob: n.q,
        })
        .collect();
    nodes.sort_by_key(|n| n.id);
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in doc.edges {
        if e.width as usize != e.p.len() {
            return Err(Error::InvalidTopology(format!(
                "edge {} declares width {} but has {} channel probabilities",
                e.id,
                e.width,
                e.p.len()
            )));
        }
        edges.push(Edge {
            id: EdgeId(e.id),
            endpoints: (NodeId(e.u), NodeId(e.v)),
            length: e.length,
            channel_probs: e.p,
        });
    }
    edges.sort_by_key(|e| e.id);
    let graph = NetworkGraph::new(nodes, edges)?;
    let schedule = doc.schedule.map(ParameterSchedule::new).transpose()?;
    Ok((graph, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{make_grid, Overrides};

    #[test]
    fn round_trip_preserves_graph_and_schedule() {
        let g = make_grid(3, 2, Some(4), 0.8, 0.9).unwrap();
        let s = ParameterSchedule::new(vec![ScheduleEntry {
            start_slot: 10,
            overrides: Overrides {
                p: Some(0.5),
                ..Default::default()
            },
        }])
        .unwrap();
        let text = to_json(&g, Some(&s));
        let (g2, s2) = from_json(&text).unwrap();
        assert_eq!(g, g2);
        assert_eq!(Some(s), s2);
    }

    #[test]
    fn rejects_width_mismatch() {
        let text = r#"{
            "nodes": [
                {"id": 0, "x": 0.0, "y": 0.0, "qubits": null, "q": 1.0},
                {"id": 1, "x": 1.0, "y": 0.0, "qubits": 2, "q": 1.0}
            ],
            "edges": [
                {"id": 0, "u": 0, "v": 1, "length": 1.0, "width": 2, "p": [0.5]}
            ]
        }"#;
        assert!(from_json(text).is_err());
    }
}
