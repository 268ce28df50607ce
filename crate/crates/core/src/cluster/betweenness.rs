use std::collections::{BTreeMap, VecDeque};

use crate::topo::EdgeId;

use super::InducedSubgraph;

/// Edge betweenness over ordered node pairs with unit edge lengths:
/// for each edge, the sum over ordered pairs (s, t) of the fraction of
/// shortest s-t paths that traverse it (Brandes accumulation).
pub fn edge_betweenness(sub: &InducedSubgraph<'_>) -> BTreeMap<EdgeId, f64> {
    let scores = edge_betweenness_masked(sub, &vec![false; sub.edge_count()]);
    sub.edges()
        .iter()
        .enumerate()
        .map(|(i, &(_, _, eid))| (eid, scores[i]))
        .collect()
}

/// Brandes accumulation over the subgraph with `removed` edges masked out.
/// Returns one score per local edge index (removed edges score 0).
pub(crate) fn edge_betweenness_masked(sub: &InducedSubgraph<'_>, removed: &[bool]) -> Vec<f64> {
    let n = sub.node_count();
    let mut scores = vec![0.0; sub.edge_count()];
    let mut dist = vec![usize::MAX; n];
    let mut sigma = vec![0.0f64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);

    for s in 0..n {
        for v in 0..n {
            dist[v] = usize::MAX;
            sigma[v] = 0.0;
            delta[v] = 0.0;
            preds[v].clear();
        }
        order.clear();
        dist[s] = 0;
        sigma[s] = 1.0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, e) in sub.adj(u) {
                if removed[e] {
                    continue;
                }
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                    preds[v].push((u, e));
                }
            }
        }
        for &w in order.iter().rev() {
            for &(v, e) in &preds[w] {
                let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
                scores[e] += c;
                delta[v] += c;
            }
        }
    }
    scores
}
