use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::topo::{Channel, NetworkGraph, NodeId};

use super::{FusionAttempt, LinkSample};

/// Graph whose vertices are successful links; two links are joined when a
/// successful fusion at their shared node contains both. A successful
/// n-link fusion connects its links pairwise (one shared entangled state),
/// so fusions are stored as groups and arcs are the induced cliques.
#[derive(Clone, Debug)]
pub struct LinkGraph {
    vertices: Vec<Channel>,
    /// Link-index sets of successful fusions, with the fusing node.
    groups: Vec<(NodeId, Vec<u32>)>,
    /// Component representative per vertex, precomputed at build time.
    component: Vec<u32>,
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        parent[rb as usize] = ra;
    }
}

impl LinkGraph {
    /// Successful links, sorted by channel id.
    pub fn vertices(&self) -> &[Channel] {
        &self.vertices
    }

    pub fn vertex_index(&self, ch: Channel) -> Option<usize> {
        self.vertices.binary_search(&ch).ok()
    }

    /// Materialized arc list: one unordered pair per clique edge of every
    /// successful fusion.
    pub fn arcs(&self) -> Vec<(Channel, Channel)> {
        let mut arcs = Vec::new();
        for (_, group) in &self.groups {
            for i in 0..group.len() {
                for j in (i + 1)..group.len() {
                    arcs.push((
                        self.vertices[group[i] as usize],
                        self.vertices[group[j] as usize],
                    ));
                }
            }
        }
        arcs
    }

    /// Component representative of a vertex in the full link graph.
    pub fn component_of(&self, vertex: usize) -> u32 {
        self.component[vertex]
    }
}

/// Assemble the link graph from sampled links and fusion attempts. Only
/// successful links become vertices and only successful fusions contribute
/// connectivity; every attempt must reference sampled successful links.
pub fn build_link_graph(links: &[LinkSample], fusions: &[FusionAttempt]) -> Result<LinkGraph> {
    let mut vertices: Vec<Channel> = links
        .iter()
        .filter(|l| l.success)
        .map(|l| l.channel)
        .collect();
    vertices.sort_unstable();
    vertices.dedup();

    let mut groups = Vec::new();
    let mut parent: Vec<u32> = (0..vertices.len() as u32).collect();
    for f in fusions {
        let mut idx = Vec::with_capacity(f.links.len());
        for ch in &f.links {
            let Ok(i) = vertices.binary_search(ch) else {
                return Err(Error::InternalConsistency(format!(
                    "fusion at node {} references unsuccessful link {ch}",
                    f.node
                )));
            };
            idx.push(i as u32);
        }
        if !f.success {
            continue;
        }
        for w in idx.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
        groups.push((f.node, idx));
    }
    let component: Vec<u32> = (0..vertices.len() as u32)
        .map(|i| find(&mut parent, i))
        .collect();
    Ok(LinkGraph {
        vertices,
        groups,
        component,
    })
}

/// True iff some connected component of the link graph contains both a link
/// incident to `s` and a link incident to `d`.
pub fn end_to_end_success(lg: &LinkGraph, graph: &NetworkGraph, s: NodeId, d: NodeId) -> bool {
    let mut s_comps = BTreeSet::new();
    let mut d_comps = BTreeSet::new();
    for (i, ch) in lg.vertices.iter().enumerate() {
        let e = graph.edge(ch.edge);
        let comp = lg.component[i];
        if e.is_incident(s) {
            s_comps.insert(comp);
        }
        if e.is_incident(d) {
            d_comps.insert(comp);
        }
    }
    s_comps.intersection(&d_comps).next().is_some()
}

/// Decide whether cluster `i` of the path passed: restricting the link
/// graph to links with both endpoints in `C_{i-1} ∪ C_i ∪ C_{i+1}` (with
/// `{s}` before the first cluster and `{d}` after the last), some component
/// must contain both an entry link (incident to the previous segment) and
/// an exit link (incident to the next segment).
pub fn cluster_pass(
    lg: &LinkGraph,
    graph: &NetworkGraph,
    segments: &[&BTreeSet<NodeId>],
    s: NodeId,
    d: NodeId,
    i: usize,
) -> Result<bool> {
    if segments.is_empty() || i >= segments.len() {
        return Err(Error::Domain(format!(
            "cluster index {i} out of range for a {}-cluster path",
            segments.len()
        )));
    }
    let last = segments.len() - 1;
    let source_sentinel;
    let dest_sentinel;
    let prev: &BTreeSet<NodeId> = if i == 0 {
        source_sentinel = BTreeSet::from([s]);
        &source_sentinel
    } else {
        segments[i - 1]
    };
    let next: &BTreeSet<NodeId> = if i == last {
        dest_sentinel = BTreeSet::from([d]);
        &dest_sentinel
    } else {
        segments[i + 1]
    };
    let cur = segments[i];
    let in_region =
        |n: NodeId| -> bool { prev.contains(&n) || cur.contains(&n) || next.contains(&n) };

    // Restricted connectivity: within each successful fusion group, links
    // that survive the restriction stay pairwise connected.
    let n = lg.vertices.len() as u32;
    let mut allowed = vec![false; n as usize];
    let mut entry = Vec::new();
    let mut exit = Vec::new();
    for (idx, ch) in lg.vertices.iter().enumerate() {
        let (u, v) = graph.edge(ch.edge).endpoints;
        if in_region(u) && in_region(v) {
            allowed[idx] = true;
            if prev.contains(&u) || prev.contains(&v) {
                entry.push(idx as u32);
            }
            if next.contains(&u) || next.contains(&v) {
                exit.push(idx as u32);
            }
        }
    }
    if entry.is_empty() || exit.is_empty() {
        return Ok(false);
    }
    let mut parent: Vec<u32> = (0..n).collect();
    for (_, group) in &lg.groups {
        let mut anchor: Option<u32> = None;
        for &gi in group {
            if !allowed[gi as usize] {
                continue;
            }
            match anchor {
                None => anchor = Some(gi),
                Some(a) => union(&mut parent, a, gi),
            }
        }
    }
    let exit_comps: BTreeSet<u32> = exit.iter().map(|&x| find(&mut parent, x)).collect();
    Ok(entry
        .iter()
        .any(|&e| exit_comps.contains(&find(&mut parent, e))))
}
