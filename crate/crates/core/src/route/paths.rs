use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cluster::{ClusterId, Clustering};
use crate::error::{Error, Result};

use super::{ClusterPath, Request, RequestId};

/// Weighted directed graph over clusters: for adjacent clusters A and B the
/// arc A->B weighs |A| divided by the number of channels between them, so
/// routing favors high inter-cluster connectivity and small clusters.
#[derive(Clone, Debug)]
pub struct ClusterGraph {
    ids: Vec<ClusterId>,
    arcs: Vec<Vec<(usize, f64)>>,
}

impl ClusterGraph {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[ClusterId] {
        &self.ids
    }

    pub fn index_of(&self, id: ClusterId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Outgoing arcs of a cluster as (target index, weight).
    pub fn arcs(&self, index: usize) -> &[(usize, f64)] {
        &self.arcs[index]
    }

    pub fn weight(&self, from: ClusterId, to: ClusterId) -> Option<f64> {
        let i = self.index_of(from)?;
        let j = self.index_of(to)?;
        self.arcs[i].iter().find(|(t, _)| *t == j).map(|(_, w)| *w)
    }
}

/// Build the weighted cluster graph induced by a clustering.
pub fn cluster_graph(clustering: &Clustering) -> ClusterGraph {
    let ids: Vec<ClusterId> = clustering.cluster_ids().collect();
    let index = |id: ClusterId| ids.binary_search(&id).expect("cluster id present");
    let mut arcs = vec![Vec::new(); ids.len()];
    for (&(a, b), &channels) in clustering.adjacency() {
        let (ia, ib) = (index(a), index(b));
        let ch = channels as f64;
        arcs[ia].push((ib, clustering.size(a) as f64 / ch));
        arcs[ib].push((ia, clustering.size(b) as f64 / ch));
    }
    ClusterGraph { ids, arcs }
}

/// Result of one slot's path selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    pub paths: Vec<ClusterPath>,
    pub skipped: Vec<RequestId>,
}

/// Select cluster paths for the requests in their given (FIFO) order.
/// Dijkstra runs over the residual cluster graph; a served path's clusters
/// are removed before the next request, and requests with no path in the
/// residual graph are skipped for the slot.
pub fn select_paths(requests: &[Request], clustering: &Clustering) -> Result<Selection> {
    let graph = cluster_graph(clustering);
    let mut removed = vec![false; graph.len()];
    let mut paths = Vec::new();
    let mut skipped = Vec::new();
    for req in requests {
        let source = clustering.cluster_of(req.source);
        let dest = clustering.cluster_of(req.destination);
        let (Some(si), Some(di)) = (graph.index_of(source), graph.index_of(dest)) else {
            return Err(Error::InternalConsistency(format!(
                "request {} endpoints are not clustered",
                req.id
            )));
        };
        match dijkstra(&graph, &removed, si, di) {
            Some(path) => {
                for &c in &path {
                    removed[c] = true;
                }
                paths.push(ClusterPath {
                    request: req.id,
                    clusters: path.into_iter().map(|i| graph.ids[i]).collect(),
                });
            }
            None => skipped.push(req.id),
        }
    }
    Ok(Selection { paths, skipped })
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by (cost, node index) for deterministic expansion.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(graph: &ClusterGraph, removed: &[bool], from: usize, to: usize) -> Option<Vec<usize>> {
    if removed[from] || removed[to] {
        return None;
    }
    if from == to {
        return Some(vec![from]);
    }
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[from] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        cost: 0.0,
        node: from,
    });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == to {
            break;
        }
        for &(next, w) in graph.arcs(node) {
            if removed[next] || done[next] {
                continue;
            }
            let candidate = cost + w;
            if candidate < dist[next] {
                dist[next] = candidate;
                prev[next] = node;
                heap.push(HeapEntry {
                    cost: candidate,
                    node: next,
                });
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{make_grid, NodeId};

    fn req(id: u64, s: u32, d: u32) -> Request {
        Request {
            id: RequestId(id),
            source: NodeId(s),
            destination: NodeId(d),
            arrival_slot: id,
        }
    }

    #[test]
    fn weights_follow_tail_size_over_channels() {
        // 4x4 grid, 2x2 blocks: adjacent blocks share 2 unit-width edges.
        let g = make_grid(4, 1, Some(4), 0.9, 0.9).unwrap();
        let clustering = Clustering::grid_squares(&g, 4, 2).unwrap();
        let graph = cluster_graph(&clustering);
        let ids = graph.ids().to_vec();
        assert_eq!(graph.weight(ids[0], ids[1]), Some(4.0 / 2.0));
        assert_eq!(graph.weight(ids[1], ids[0]), Some(4.0 / 2.0));
        // Diagonal blocks are not adjacent.
        assert_eq!(graph.weight(ids[0], ids[3]), None);
    }

    #[test]
    fn singleton_unit_widths_give_unit_weights() {
        let g = make_grid(3, 1, Some(4), 0.9, 0.9).unwrap();
        let clustering = Clustering::singletons(&g);
        let graph = cluster_graph(&clustering);
        for i in 0..graph.len() {
            for &(_, w) in graph.arcs(i) {
                assert_eq!(w, 1.0);
            }
        }
    }

    #[test]
    fn disjoint_requests_are_both_served() {
        let g = make_grid(4, 1, Some(4), 0.9, 0.9).unwrap();
        let clustering = Clustering::singletons(&g);
        // Top row and bottom row paths don't share clusters.
        let requests = [req(0, 0, 3), req(1, 12, 15)];
        let sel = select_paths(&requests, &clustering).unwrap();
        assert_eq!(sel.paths.len(), 2);
        assert!(sel.skipped.is_empty());
    }

    #[test]
    fn contested_cluster_serves_only_the_older_request() {
        let g = make_grid(2, 1, Some(4), 0.9, 0.9).unwrap();
        let clustering = Clustering::single(&g);
        let requests = [req(0, 0, 3), req(1, 1, 2)];
        let sel = select_paths(&requests, &clustering).unwrap();
        assert_eq!(sel.paths.len(), 1);
        assert_eq!(sel.paths[0].request, RequestId(0));
        assert_eq!(sel.skipped, vec![RequestId(1)]);
    }

    #[test]
    fn same_cluster_pair_uses_single_cluster_path() {
        let g = make_grid(4, 1, Some(4), 0.9, 0.9).unwrap();
        let clustering = Clustering::grid_squares(&g, 4, 2).unwrap();
        let requests = [req(0, 0, 5)];
        let sel = select_paths(&requests, &clustering).unwrap();
        assert_eq!(sel.paths[0].clusters.len(), 1);
    }

    #[test]
    fn selected_paths_are_simple_and_adjacent() {
        let g = make_grid(6, 1, Some(4), 0.9, 0.9).unwrap();
        let clustering = Clustering::grid_squares(&g, 6, 2).unwrap();
        let requests = [req(0, 0, 35)];
        let sel = select_paths(&requests, &clustering).unwrap();
        let path = &sel.paths[0].clusters;
        let unique: std::collections::BTreeSet<_> = path.iter().collect();
        assert_eq!(unique.len(), path.len(), "path must be simple");
        for pair in path.windows(2) {
            assert!(clustering.channels_between(pair[0], pair[1]) > 0);
        }
    }
}
