use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::topo::{Channel, EffectiveParams, NetworkGraph, NodeId};

use super::{FusionAttempt, LinkSample};

/// Plan the fusion rounds for one node's successful incident links.
///
/// Each round selects the lowest-id remaining link from every incident edge
/// that still has one, then repeats on the remainder. A selection that would
/// leave a single link absorbs it. A node with fewer than two successful
/// links yields an empty plan, and no emitted set has size one: a stray
/// singleton round joins the previous round, or the next one when it is
/// first.
pub fn fusion_plan(links: &[Channel]) -> Vec<Vec<Channel>> {
    if links.len() < 2 {
        return Vec::new();
    }
    let mut by_edge: BTreeMap<_, VecDeque<Channel>> = BTreeMap::new();
    let mut sorted = links.to_vec();
    sorted.sort_unstable();
    for ch in sorted {
        by_edge.entry(ch.edge).or_default().push_back(ch);
    }
    let mut remaining = links.len();
    let mut rounds: Vec<Vec<Channel>> = Vec::new();
    while remaining > 0 {
        let mut selection: Vec<Channel> =
            by_edge.values_mut().filter_map(|q| q.pop_front()).collect();
        remaining -= selection.len();
        if remaining == 1 {
            let last = by_edge
                .values_mut()
                .find_map(|q| q.pop_front())
                .expect("one link remains");
            selection.push(last);
            remaining = 0;
        }
        by_edge.retain(|_, q| !q.is_empty());
        rounds.push(selection);
    }

    let mut plan: Vec<Vec<Channel>> = Vec::with_capacity(rounds.len());
    let mut carry: Vec<Channel> = Vec::new();
    for round in rounds {
        let mut round = round;
        if !carry.is_empty() {
            carry.extend(round);
            round = std::mem::take(&mut carry);
        }
        if round.len() == 1 {
            match plan.last_mut() {
                Some(prev) => prev.extend(round),
                None => carry = round,
            }
        } else {
            plan.push(round);
        }
    }
    if !carry.is_empty() {
        if let Some(prev) = plan.last_mut() {
            prev.extend(carry);
        }
    }
    plan
}

/// Group successful links by node and compute every node's fusion plan,
/// keyed by node id. Each link is incident to both of its edge's endpoints.
pub fn plan_all_fusions(
    graph: &NetworkGraph,
    links: &[LinkSample],
) -> BTreeMap<NodeId, Vec<Vec<Channel>>> {
    let mut incident: BTreeMap<NodeId, Vec<Channel>> = BTreeMap::new();
    for l in links {
        if !l.success {
            continue;
        }
        let (u, v) = graph.edge(l.channel.edge).endpoints;
        incident.entry(u).or_default().push(l.channel);
        incident.entry(v).or_default().push(l.channel);
    }
    incident
        .into_iter()
        .filter_map(|(node, chans)| {
            let plan = fusion_plan(&chans);
            (!plan.is_empty()).then_some((node, plan))
        })
        .collect()
}

/// Sample every planned fusion independently with its node's effective
/// fusion probability; the tier records the 1-based round index.
pub fn sample_fusions(
    plans: &BTreeMap<NodeId, Vec<Vec<Channel>>>,
    graph: &NetworkGraph,
    params: &EffectiveParams,
    rng: &mut impl Rng,
) -> Vec<FusionAttempt> {
    let mut attempts = Vec::new();
    for (&node, rounds) in plans {
        let q = params.fusion_prob(graph, node);
        for (i, round) in rounds.iter().enumerate() {
            attempts.push(FusionAttempt {
                node,
                links: round.clone(),
                success: rng.gen::<f64>() < q,
                tier: i as u32 + 1,
            });
        }
    }
    attempts
}
