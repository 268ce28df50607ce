use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::topo::NodeId;

use super::betweenness::edge_betweenness_masked;
use super::InducedSubgraph;

/// Partition the subgraph's nodes into exactly `parts` non-empty sets by
/// repeatedly removing a maximum-betweenness edge (recomputing betweenness
/// after every removal) until at least `parts` connected components exist.
/// Ties break toward the smallest edge id. If the component count ever
/// exceeds `parts` (possible only when the input is already disconnected),
/// the smallest components are folded into their most-connected neighbor
/// component until exactly `parts` remain.
pub fn girvan_newman(sub: &InducedSubgraph<'_>, parts: usize) -> Result<Vec<BTreeSet<NodeId>>> {
    let n = sub.node_count();
    if parts == 0 {
        return Err(Error::Domain("cannot split into zero parts".into()));
    }
    if n < parts {
        return Err(Error::InfeasibleSplit { nodes: n, parts });
    }
    let mut removed = vec![false; sub.edge_count()];
    let mut components = components_with_mask(sub, &removed);
    while components.len() < parts {
        let scores = edge_betweenness_masked(sub, &removed);
        let mut best: Option<usize> = None;
        for (i, &gone) in removed.iter().enumerate() {
            if gone {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if scores[i] > scores[b] => best = Some(i),
                _ => {}
            }
        }
        let Some(target) = best else {
            // No edges left but still fewer than `parts` components: cannot
            // happen since every node is its own component by then.
            break;
        };
        removed[target] = true;
        components = components_with_mask(sub, &removed);
    }

    if components.len() > parts {
        merge_excess_components(sub, &mut components, parts);
    }
    Ok(components
        .into_iter()
        .map(|c| c.into_iter().map(|l| sub.nodes()[l]).collect())
        .collect())
}

fn components_with_mask(sub: &InducedSubgraph<'_>, removed: &[bool]) -> Vec<BTreeSet<usize>> {
    let n = sub.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut components = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = BTreeSet::from([start]);
        comp[start] = id;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, e) in sub.adj(u) {
                if !removed[e] && comp[v] == usize::MAX {
                    comp[v] = id;
                    members.insert(v);
                    stack.push(v);
                }
            }
        }
        components.push(members);
    }
    components
}

/// Fold the smallest component into the neighbor component (in the
/// unmasked subgraph) it shares the most edges with, repeating until
/// exactly `parts` components remain. A component with no neighbors falls
/// back to the next-smallest component.
fn merge_excess_components(
    sub: &InducedSubgraph<'_>,
    components: &mut Vec<BTreeSet<usize>>,
    parts: usize,
) {
    while components.len() > parts {
        components.sort_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| a.iter().next().cmp(&b.iter().next()))
        });
        let smallest = components.remove(0);
        let mut link_counts = vec![0usize; components.len()];
        for &u in &smallest {
            for &(v, _) in sub.adj(u) {
                if let Some(ci) = components.iter().position(|c| c.contains(&v)) {
                    link_counts[ci] += 1;
                }
            }
        }
        let target = (0..components.len())
            .max_by(|&a, &b| {
                link_counts[a].cmp(&link_counts[b]).then_with(|| {
                    components[b]
                        .iter()
                        .next()
                        .cmp(&components[a].iter().next())
                })
            })
            .expect("at least `parts` >= 1 components remain");
        components[target].extend(smallest);
    }
}
