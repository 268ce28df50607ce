//! Brute-force oracles and random-instance generators shared by the
//! acceptance suite. Everything here is deliberately independent of the
//! library's implementation paths: connectivity is re-derived by explicit
//! BFS over links and fusion groups, betweenness by shortest-path
//! enumeration, and the Kemeny constant by the fundamental matrix.

// Each integration-test binary compiles this module separately and uses
// its own subset.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;

use quarc_sim::percolate::{FusionAttempt, LinkSample};
use quarc_sim::topo::{Channel, Edge, EdgeId, NetworkGraph, Node, NodeId};

pub fn random_connected_graph(
    rng: &mut impl Rng,
    max_nodes: u32,
    max_width: u32,
    extra_edge_prob: f64,
    qubit_capacity: Option<u32>,
) -> NetworkGraph {
    let n = rng.gen_range(2..=max_nodes);
    let mut pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        pairs.insert((j, i));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < extra_edge_prob {
                pairs.insert((u, v));
            }
        }
    }
    let mut nodes = Vec::new();
    for i in 0..n {
        nodes.push(Node {
            id: NodeId(i),
            x: rng.gen(),
            y: rng.gen(),
            qubit_capacity,
            fusion_prob: rng.gen_range(0.3..1.0),
        });
    }
    let mut edges = Vec::new();
    for (i, &(u, v)) in pairs.iter().enumerate() {
        let width = rng.gen_range(1..=max_width);
        let mut channel_probs = Vec::with_capacity(width as usize);
        for _ in 0..width {
            channel_probs.push(rng.gen_range(0.2..0.95));
        }
        edges.push(Edge {
            id: EdgeId(i as u32),
            endpoints: (NodeId(u), NodeId(v)),
            length: 1.0,
            channel_probs,
        });
    }
    NetworkGraph::new(nodes, edges).expect("generated graph is valid")
}

/// Same topology with every node's qubit capacity replaced.
pub fn clone_with_capacity(graph: &NetworkGraph, capacity: Option<u32>) -> NetworkGraph {
    let nodes = graph
        .nodes()
        .iter()
        .map(|n| Node {
            qubit_capacity: capacity,
            ..n.clone()
        })
        .collect();
    NetworkGraph::new(nodes, graph.edges().to_vec()).expect("clone preserves validity")
}

pub fn all_channels(graph: &NetworkGraph) -> Vec<Channel> {
    graph
        .edges()
        .iter()
        .flat_map(|e| (0..e.width()).map(move |index| Channel { edge: e.id, index }))
        .collect()
}

/// Random partition of the nodes into connected clusters, built by merging
/// across randomly chosen crossing edges.
pub fn random_connected_partition(
    rng: &mut impl Rng,
    graph: &NetworkGraph,
    target_clusters: usize,
) -> Vec<BTreeSet<NodeId>> {
    let n = graph.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let mut clusters = n;
    while clusters > target_clusters.max(1) {
        let crossing: Vec<(usize, usize)> = graph
            .edges()
            .iter()
            .map(|e| (e.endpoints.0.index(), e.endpoints.1.index()))
            .filter(|&(u, v)| find(&mut parent, u) != find(&mut parent, v))
            .collect();
        if crossing.is_empty() {
            break;
        }
        let (u, v) = crossing[rng.gen_range(0..crossing.len())];
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        parent[rv] = ru;
        clusters -= 1;
    }
    let mut sets: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        sets.entry(root).or_default().insert(NodeId(i as u32));
    }
    sets.into_values().collect()
}

/// BFS path over the cluster adjacency from the cluster holding `s` to the
/// one holding `d`, returned as member sets in path order.
pub fn cluster_path_between(
    graph: &NetworkGraph,
    partition: &[BTreeSet<NodeId>],
    s: NodeId,
    d: NodeId,
) -> Vec<BTreeSet<NodeId>> {
    let cluster_of = |n: NodeId| {
        partition
            .iter()
            .position(|c| c.contains(&n))
            .expect("partition covers node")
    };
    let adjacent = |a: usize, b: usize| {
        graph.edges().iter().any(|e| {
            let (cu, cv) = (cluster_of(e.endpoints.0), cluster_of(e.endpoints.1));
            (cu == a && cv == b) || (cu == b && cv == a)
        })
    };
    let start = cluster_of(s);
    let goal = cluster_of(d);
    let mut prev = vec![usize::MAX; partition.len()];
    let mut seen = vec![false; partition.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            break;
        }
        for other in 0..partition.len() {
            if !seen[other] && adjacent(c, other) {
                seen[other] = true;
                prev[other] = c;
                queue.push_back(other);
            }
        }
    }
    let mut order = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        order.push(cur);
    }
    order.reverse();
    order.into_iter().map(|i| partition[i].clone()).collect()
}

fn successful_links(links: &[LinkSample]) -> BTreeSet<Channel> {
    links
        .iter()
        .filter(|l| l.success)
        .map(|l| l.channel)
        .collect()
}

/// Fusion-contraction reachability: BFS over the bipartite incidence of
/// successful links and successful fusion groups, from the links incident
/// to `s` toward any link incident to `d`.
pub fn oracle_end_to_end(
    graph: &NetworkGraph,
    links: &[LinkSample],
    fusions: &[FusionAttempt],
    s: NodeId,
    d: NodeId,
) -> bool {
    let up = successful_links(links);
    restricted_reachability(graph, &up, fusions, s, d, |_| true)
}

fn restricted_reachability(
    graph: &NetworkGraph,
    allowed: &BTreeSet<Channel>,
    fusions: &[FusionAttempt],
    s: NodeId,
    d: NodeId,
    allow: impl Fn(Channel) -> bool,
) -> bool {
    let allowed: BTreeSet<Channel> = allowed.iter().copied().filter(|c| allow(*c)).collect();
    let groups: Vec<Vec<Channel>> = fusions
        .iter()
        .filter(|f| f.success)
        .map(|f| {
            f.links
                .iter()
                .copied()
                .filter(|c| allowed.contains(c))
                .collect()
        })
        .collect();
    let mut membership: BTreeMap<Channel, Vec<usize>> = BTreeMap::new();
    for (gi, group) in groups.iter().enumerate() {
        for &ch in group {
            membership.entry(ch).or_default().push(gi);
        }
    }
    let incident = |ch: Channel, n: NodeId| graph.edge(ch.edge).is_incident(n);
    let mut queue: VecDeque<Channel> = allowed
        .iter()
        .copied()
        .filter(|c| incident(*c, s))
        .collect();
    let mut seen: BTreeSet<Channel> = queue.iter().copied().collect();
    let mut seen_groups = vec![false; groups.len()];
    while let Some(ch) = queue.pop_front() {
        if incident(ch, d) {
            return true;
        }
        if let Some(gids) = membership.get(&ch) {
            for &gi in gids {
                if seen_groups[gi] {
                    continue;
                }
                seen_groups[gi] = true;
                for &next in &groups[gi] {
                    if seen.insert(next) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    false
}

/// Exhaustive entry/exit enumeration for the cluster-pass check: restrict
/// to links inside `prev ∪ cur ∪ next` and test every (entry, exit) pair
/// for connectivity through successful fusions.
pub fn oracle_cluster_pass(
    graph: &NetworkGraph,
    links: &[LinkSample],
    fusions: &[FusionAttempt],
    segments: &[BTreeSet<NodeId>],
    s: NodeId,
    d: NodeId,
    i: usize,
) -> bool {
    let last = segments.len() - 1;
    let prev: BTreeSet<NodeId> = if i == 0 {
        BTreeSet::from([s])
    } else {
        segments[i - 1].clone()
    };
    let next: BTreeSet<NodeId> = if i == last {
        BTreeSet::from([d])
    } else {
        segments[i + 1].clone()
    };
    let mut region = prev.clone();
    region.extend(segments[i].iter().copied());
    region.extend(next.iter().copied());
    let in_region = |ch: Channel| {
        let (u, v) = graph.edge(ch.edge).endpoints;
        region.contains(&u) && region.contains(&v)
    };
    let up = successful_links(links);
    let allowed: Vec<Channel> = up.iter().copied().filter(|c| in_region(*c)).collect();
    let touches = |ch: Channel, set: &BTreeSet<NodeId>| {
        let (u, v) = graph.edge(ch.edge).endpoints;
        set.contains(&u) || set.contains(&v)
    };
    let entries: Vec<Channel> = allowed
        .iter()
        .copied()
        .filter(|c| touches(*c, &prev))
        .collect();
    let exits: Vec<Channel> = allowed
        .iter()
        .copied()
        .filter(|c| touches(*c, &next))
        .collect();
    for &entry in &entries {
        for &exit in &exits {
            if entry == exit {
                return true;
            }
            if pair_connected(graph, &up, fusions, entry, exit, &in_region) {
                return true;
            }
        }
    }
    false
}

fn pair_connected(
    _graph: &NetworkGraph,
    up: &BTreeSet<Channel>,
    fusions: &[FusionAttempt],
    from: Channel,
    to: Channel,
    allow: &impl Fn(Channel) -> bool,
) -> bool {
    let allowed: BTreeSet<Channel> = up.iter().copied().filter(|c| allow(*c)).collect();
    if !allowed.contains(&from) || !allowed.contains(&to) {
        return false;
    }
    let groups: Vec<Vec<Channel>> = fusions
        .iter()
        .filter(|f| f.success)
        .map(|f| {
            f.links
                .iter()
                .copied()
                .filter(|c| allowed.contains(c))
                .collect()
        })
        .collect();
    let mut membership: BTreeMap<Channel, Vec<usize>> = BTreeMap::new();
    for (gi, group) in groups.iter().enumerate() {
        for &ch in group {
            membership.entry(ch).or_default().push(gi);
        }
    }
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(ch) = queue.pop_front() {
        if ch == to {
            return true;
        }
        if let Some(gids) = membership.get(&ch) {
            for &gi in gids {
                for &next in &groups[gi] {
                    if seen.insert(next) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    false
}

/// Ordered-pairs edge betweenness by explicit shortest-path enumeration.
pub fn oracle_edge_betweenness(graph: &NetworkGraph) -> BTreeMap<EdgeId, f64> {
    let n = graph.node_count();
    let mut scores: BTreeMap<EdgeId, f64> = graph.edges().iter().map(|e| (e.id, 0.0)).collect();
    for s in 0..n {
        // BFS distances from s.
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([NodeId(s as u32)]);
        while let Some(u) = queue.pop_front() {
            for v in graph.neighbors(u) {
                if dist[v.index()] == usize::MAX {
                    dist[v.index()] = dist[u.index()] + 1;
                    queue.push_back(v);
                }
            }
        }
        for t in 0..n {
            if t == s || dist[t] == usize::MAX {
                continue;
            }
            // Enumerate every shortest path s -> t by walking backwards.
            let mut paths: Vec<Vec<EdgeId>> = Vec::new();
            let mut stack: Vec<(NodeId, Vec<EdgeId>)> = vec![(NodeId(t as u32), Vec::new())];
            while let Some((v, path)) = stack.pop() {
                if v.index() == s {
                    paths.push(path);
                    continue;
                }
                for &eid in graph.incident_edges(v) {
                    let u = graph.edge(eid).other(v);
                    if dist[u.index()] + 1 == dist[v.index()] {
                        let mut longer = path.clone();
                        longer.push(eid);
                        stack.push((u, longer));
                    }
                }
            }
            let sigma = paths.len() as f64;
            for path in &paths {
                for eid in path {
                    *scores.get_mut(eid).expect("edge known") += 1.0 / sigma;
                }
            }
        }
    }
    scores
}

/// Kemeny constant through the fundamental matrix Z = (I - P + Pi)^-1 and
/// mean first passage times; asserts start-state independence internally.
pub fn oracle_kemeny(graph: &NetworkGraph, members: &BTreeSet<NodeId>) -> f64 {
    let nodes: Vec<NodeId> = members.iter().copied().collect();
    let n = nodes.len();
    let local = |id: NodeId| nodes.binary_search(&id).expect("member");
    let mut adj = vec![Vec::new(); n];
    for (i, &u) in nodes.iter().enumerate() {
        for v in graph.neighbors(u) {
            if members.contains(&v) {
                adj[i].push(local(v));
            }
        }
    }
    let degree_sum: usize = adj.iter().map(|a| a.len()).sum();
    let mut p = DMatrix::<f64>::zeros(n, n);
    let mut pi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for &j in &adj[i] {
            p[(i, j)] += 1.0 / adj[i].len() as f64;
        }
        for j in 0..n {
            pi[(i, j)] = adj[j].len() as f64 / degree_sum as f64;
        }
    }
    let z = (DMatrix::identity(n, n) - p + pi.clone())
        .try_inverse()
        .expect("fundamental matrix exists for connected walks");
    // Mean first passage m[i][j] = (z[j][j] - z[i][j]) / pi[j];
    // K_i = sum_j pi_j m[i][j] must not depend on i.
    let stationary: Vec<f64> = (0..n).map(|j| pi[(0, j)]).collect();
    let mut k_values = Vec::with_capacity(n);
    for i in 0..n {
        let mut k = 0.0;
        for j in 0..n {
            if i != j {
                let m_ij = (z[(j, j)] - z[(i, j)]) / stationary[j];
                k += stationary[j] * m_ij;
            }
        }
        k_values.push(k);
    }
    for w in k_values.windows(2) {
        assert!(
            (w[0] - w[1]).abs() < 1e-9,
            "kemeny start-independence violated: {} vs {}",
            w[0],
            w[1]
        );
    }
    k_values[0]
}
