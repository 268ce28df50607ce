//! Link sampling, the local fusion protocol, and percolation checks for one
//! serviced request.
//!
//! A successful entanglement over a channel is a *link*. Nodes fuse their
//! incident successful links in greedy rounds; a successful fusion joins all
//! its links into one entangled component. A request succeeds when some
//! chain of successful links and fusions connects the source to the
//! destination.

mod fusion;
mod link_graph;

pub use fusion::{fusion_plan, plan_all_fusions, sample_fusions};
pub use link_graph::{build_link_graph, cluster_pass, end_to_end_success, LinkGraph};

use rand::Rng;

use crate::error::Result;
use crate::topo::{Channel, EffectiveParams, NetworkGraph, NodeId};

/// Outcome of one entanglement-generation attempt on an assigned channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkSample {
    pub channel: Channel,
    pub success: bool,
}

/// One fusion operation attempted at a node on a set of incident links.
/// `tier` is the greedy round that produced it (1 = primary).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FusionAttempt {
    pub node: NodeId,
    pub links: Vec<Channel>,
    pub success: bool,
    pub tier: u32,
}

/// Everything sampled for one serviced request in one slot.
#[derive(Clone, Debug)]
pub struct SlotOutcome {
    pub links: Vec<LinkSample>,
    pub fusions: Vec<FusionAttempt>,
    pub link_graph: LinkGraph,
}

/// Sample entanglement generation on every assigned channel, independently
/// Bernoulli with that channel's effective probability. Channels are
/// sampled in the caller-provided order.
pub fn sample_links(
    assigned: &[Channel],
    graph: &NetworkGraph,
    params: &EffectiveParams,
    rng: &mut impl Rng,
) -> Vec<LinkSample> {
    assigned
        .iter()
        .map(|&channel| LinkSample {
            channel,
            success: rng.gen::<f64>() < params.channel_prob(graph, channel),
        })
        .collect()
}

/// Run the full percolation pipeline for one request: sample links, plan
/// and sample fusions at every node, and build the link graph.
pub fn simulate_attempt(
    graph: &NetworkGraph,
    params: &EffectiveParams,
    assigned: &[Channel],
    link_rng: &mut impl Rng,
    fusion_rng: &mut impl Rng,
) -> Result<SlotOutcome> {
    let links = sample_links(assigned, graph, params, link_rng);
    let plans = plan_all_fusions(graph, &links);
    let fusions = sample_fusions(&plans, graph, params, fusion_rng);
    let link_graph = build_link_graph(&links, &fusions)?;
    Ok(SlotOutcome {
        links,
        fusions,
        link_graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, STREAM_LINKS};
    use crate::topo::{apply_schedule, make_grid, EdgeId, ParameterSchedule};

    #[test]
    fn degenerate_probabilities() {
        let all_up = make_grid(3, 1, None, 1.0, 1.0).unwrap();
        let params = apply_schedule(&all_up, &ParameterSchedule::empty(), 0);
        let assigned: Vec<Channel> = all_up
            .edges()
            .iter()
            .map(|e| Channel {
                edge: e.id,
                index: 0,
            })
            .collect();
        let mut rng = stream(1, STREAM_LINKS, 0, 0);
        assert!(sample_links(&assigned, &all_up, &params, &mut rng)
            .iter()
            .all(|l| l.success));

        let all_down = make_grid(3, 1, None, 0.0, 1.0).unwrap();
        let params = apply_schedule(&all_down, &ParameterSchedule::empty(), 0);
        let mut rng = stream(1, STREAM_LINKS, 0, 1);
        assert!(sample_links(&assigned, &all_down, &params, &mut rng)
            .iter()
            .all(|l| !l.success));
    }

    #[test]
    fn empirical_rate_matches_probability() {
        let g = make_grid(2, 1, None, 0.3, 1.0).unwrap();
        let params = apply_schedule(&g, &ParameterSchedule::empty(), 0);
        let assigned = [Channel {
            edge: EdgeId(0),
            index: 0,
        }];
        let mut rng = stream(9, STREAM_LINKS, 0, 0);
        let n = 100_000;
        let mut ups = 0u32;
        for _ in 0..n {
            if sample_links(&assigned, &g, &params, &mut rng)[0].success {
                ups += 1;
            }
        }
        let rate = ups as f64 / n as f64;
        assert!((rate - 0.3).abs() < 0.01, "rate {rate}");
    }
}
