//! Per-slot path selection over the cluster graph and randomized-priority
//! qubit-to-channel assignment.

mod assign;
mod paths;

pub use assign::{assign_qubits, QubitAssignment};
pub use paths::{cluster_graph, select_paths, ClusterGraph, Selection};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterId;
use crate::topo::NodeId;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u64);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An end-to-end entanglement request between two distinct nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Request {
    pub id: RequestId,
    pub source: NodeId,
    pub destination: NodeId,
    pub arrival_slot: u64,
}

/// The cluster path selected for a request: consecutive clusters are
/// adjacent, the source lives in the first cluster and the destination in
/// the last.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterPath {
    pub request: RequestId,
    pub clusters: Vec<ClusterId>,
}
