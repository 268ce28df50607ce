use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::topo::{NetworkGraph, NodeId};

use super::{
    girvan_newman, kemeny_constant, ClusterId, ClusterStats, Clustering, InducedSubgraph,
    ReconfigConfig, ThresholdTable,
};

/// End-of-epoch cluster reconfiguration.
///
/// Clusters whose passing rate reaches the split threshold for their size,
/// or whose neighborhood triggers the local-minimum escape (a strict
/// majority of neighbors smaller than `size/k`), are split into `k` parts
/// with Girvan-Newman. Clusters at or below the merge threshold (and not
/// splitting) are processed in increasing rate order: each picks the two
/// neighbors whose union minimizes the Kemeny constant and, when all three
/// are still untouched this epoch, the union is re-partitioned into two. A
/// cluster with a single neighbor merges with it directly. Clusters with no
/// attempts keep their structure (the local-minimum rule still applies).
pub fn reconfigure(
    clustering: &Clustering,
    stats: &BTreeMap<ClusterId, ClusterStats>,
    table: &ThresholdTable,
    cfg: &ReconfigConfig,
    graph: &NetworkGraph,
) -> Result<Clustering> {
    let network_size = graph.node_count();
    let k = cfg.split_arity.max(2) as usize;
    let rate = |id: ClusterId| stats.get(&id).and_then(|s| s.rate());

    let mut work = Partition {
        clusters: clustering.clusters().clone(),
        node_assign: (0..graph.node_count())
            .map(|i| clustering.cluster_of(NodeId(i as u32)))
            .collect(),
        next_id: clustering.next_id(),
    };

    // Mark splits and merges against the pre-epoch clustering.
    let mut to_split: BTreeSet<ClusterId> = BTreeSet::new();
    for (&id, members) in &work.clusters {
        let thresholds = table.lookup(members.len(), network_size);
        if rate(id).is_some_and(|r| r >= thresholds.split) {
            to_split.insert(id);
            continue;
        }
        let neighbors = clustering.neighbors(id);
        if !neighbors.is_empty() {
            let small = neighbors
                .iter()
                .filter(|n| (clustering.size(**n) as f64) < members.len() as f64 / k as f64)
                .count();
            if 2 * small > neighbors.len() {
                to_split.insert(id);
            }
        }
    }
    let mut to_merge: Vec<(f64, ClusterId)> = work
        .clusters
        .iter()
        .filter(|(id, _)| !to_split.contains(id))
        .filter_map(|(&id, members)| {
            let thresholds = table.lookup(members.len(), network_size);
            rate(id).and_then(|r| (r <= thresholds.merge).then_some((r, id)))
        })
        .collect();
    to_merge.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite rates")
            .then(a.1.cmp(&b.1))
    });

    // Split phase.
    for id in &to_split {
        let members = work.clusters[id].clone();
        if members.len() < 2 {
            continue;
        }
        let parts = girvan_newman(&InducedSubgraph::new(graph, &members), k.min(members.len()))?;
        work.remove(*id);
        for part in parts {
            work.insert_fresh(part);
        }
    }

    // Merge phase. `touched` is the K-set: anything already involved in a
    // merge this epoch blocks further merges with it.
    let mut touched: BTreeSet<ClusterId> = BTreeSet::new();
    for (_, id) in to_merge {
        if touched.contains(&id) || !work.clusters.contains_key(&id) {
            continue;
        }
        let members = work.clusters[&id].clone();
        let mut neighbor_set: BTreeSet<ClusterId> = BTreeSet::new();
        for &n in &members {
            for m in graph.neighbors(n) {
                let c = work.node_assign[m.index()];
                if c != id {
                    neighbor_set.insert(c);
                }
            }
        }
        let neighbors: Vec<ClusterId> = neighbor_set.into_iter().collect();
        if neighbors.is_empty() {
            continue;
        }
        if neighbors.len() == 1 {
            let x = neighbors[0];
            if touched.contains(&x) {
                continue;
            }
            let mut union = members;
            union.extend(work.remove(x));
            work.remove(id);
            let d = work.insert_fresh(union);
            touched.extend([id, x, d]);
            continue;
        }
        // Choose the neighbor pair minimizing the Kemeny constant of the
        // node-level union; ties break to the smallest id pair.
        let mut best: Option<(f64, (ClusterId, ClusterId))> = None;
        for i in 0..neighbors.len() {
            for j in (i + 1)..neighbors.len() {
                let (x1, x2) = (neighbors[i], neighbors[j]);
                let mut union = members.clone();
                union.extend(work.clusters[&x1].iter().copied());
                union.extend(work.clusters[&x2].iter().copied());
                let kc = kemeny_constant(&InducedSubgraph::new(graph, &union))?;
                let better = match &best {
                    None => true,
                    Some((b, _)) => kc < *b,
                };
                if better {
                    best = Some((kc, (x1, x2)));
                }
            }
        }
        let Some((kc, (x1, x2))) = best else {
            continue;
        };
        if kc.is_infinite() || touched.contains(&x1) || touched.contains(&x2) {
            continue;
        }
        let mut union = members;
        union.extend(work.remove(x1));
        union.extend(work.remove(x2));
        work.remove(id);
        touched.extend([id, x1, x2]);
        let parts = girvan_newman(&InducedSubgraph::new(graph, &union), 2)?;
        for part in parts {
            let d = work.insert_fresh(part);
            touched.insert(d);
        }
    }

    let Partition {
        clusters, next_id, ..
    } = work;
    Ok(Clustering::from_cluster_map(graph, clusters, next_id))
}

/// Working partition state during one reconfiguration: the cluster map plus
/// a node-to-cluster index kept in sync through splits and merges.
struct Partition {
    clusters: BTreeMap<ClusterId, BTreeSet<NodeId>>,
    node_assign: Vec<ClusterId>,
    next_id: u32,
}

impl Partition {
    fn insert_fresh(&mut self, members: BTreeSet<NodeId>) -> ClusterId {
        let id = ClusterId(self.next_id);
        self.next_id += 1;
        for n in &members {
            self.node_assign[n.index()] = id;
        }
        self.clusters.insert(id, members);
        id
    }

    fn remove(&mut self, id: ClusterId) -> BTreeSet<NodeId> {
        self.clusters.remove(&id).expect("cluster exists")
    }
}
