use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{solve_alpha, Channel, NetworkGraph, NodeId};

/// Axis-aligned spatial region in topology coordinates (bounds inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Region-scoped channel-probability override. It applies to the channels
/// of edges whose endpoints both fall inside `region`; boundary-crossing
/// edges keep their base parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionOverride {
    #[serde(flatten)]
    pub region: Rect,
    pub p: f64,
}

/// Parameter overrides carried by one schedule entry. Unset fields fall
/// back to the graph's base parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    /// Uniform channel probability for every channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Uniform fusion probability for every node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Rescale channel probabilities from edge lengths so their mean is
    /// this value (mutually exclusive with `p`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_p: Option<f64>,
    /// Per-region channel probabilities, applied after `p`/`e_p`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RegionOverride>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.p.is_none() && self.q.is_none() && self.e_p.is_none() && self.regions.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub start_slot: u64,
    #[serde(flatten)]
    pub overrides: Overrides,
}

/// Time-indexed parameter overrides. At any slot the active overrides are
/// those of the last entry whose `start_slot` is at most the slot; entries
/// do not accumulate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSchedule {
    entries: Vec<ScheduleEntry>,
}

impl ParameterSchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Result<Self> {
        for pair in entries.windows(2) {
            if pair[0].start_slot >= pair[1].start_slot {
                return Err(Error::InvalidConfig(format!(
                    "schedule start_slots must be strictly increasing ({} then {})",
                    pair[0].start_slot, pair[1].start_slot
                )));
            }
        }
        for e in &entries {
            if e.overrides.p.is_some() && e.overrides.e_p.is_some() {
                return Err(Error::InvalidConfig(format!(
                    "schedule entry at slot {} sets both p and e_p",
                    e.start_slot
                )));
            }
            for v in [e.overrides.p, e.overrides.q, e.overrides.e_p]
                .into_iter()
                .flatten()
            {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidConfig(format!(
                        "schedule entry at slot {} has a probability out of [0,1]",
                        e.start_slot
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    fn active_at(&self, slot: u64) -> Option<&Overrides> {
        self.entries
            .iter()
            .take_while(|e| e.start_slot <= slot)
            .last()
            .map(|e| &e.overrides)
    }
}

/// Fully resolved parameters for one slot: a per-edge channel probability
/// override plus the per-node fusion probability.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveParams {
    edge_p: Vec<Option<f64>>,
    node_q: Option<f64>,
}

impl EffectiveParams {
    pub fn channel_prob(&self, graph: &NetworkGraph, channel: Channel) -> f64 {
        match self.edge_p[channel.edge.index()] {
            Some(p) => p,
            None => graph.edge(channel.edge).channel_probs[channel.index as usize],
        }
    }

    pub fn fusion_prob(&self, graph: &NetworkGraph, node: NodeId) -> f64 {
        self.node_q.unwrap_or_else(|| graph.node(node).fusion_prob)
    }
}

/// Resolve the effective parameters at `slot`. The underlying topology is
/// never modified; an empty schedule yields the base parameters.
pub fn apply_schedule(
    graph: &NetworkGraph,
    schedule: &ParameterSchedule,
    slot: u64,
) -> EffectiveParams {
    let mut params = EffectiveParams {
        edge_p: vec![None; graph.edge_count()],
        node_q: None,
    };
    let Some(ov) = schedule.active_at(slot) else {
        return params;
    };
    if let Some(e_p) = ov.e_p {
        // Schedule validation pins e_p to (0,1) boundaries via [0,1]; the
        // degenerate endpoints fall back to uniform assignment.
        if e_p <= 0.0 || e_p >= 1.0 {
            for p in &mut params.edge_p {
                *p = Some(e_p);
            }
        } else if let Ok(alpha) = solve_alpha(graph, e_p) {
            for (i, e) in graph.edges().iter().enumerate() {
                params.edge_p[i] = Some((-alpha * e.length).exp());
            }
        }
    }
    if let Some(p) = ov.p {
        for slot_p in &mut params.edge_p {
            *slot_p = Some(p);
        }
    }
    for region in &ov.regions {
        for (i, e) in graph.edges().iter().enumerate() {
            let u = graph.node(e.endpoints.0);
            let v = graph.node(e.endpoints.1);
            if region.region.contains(u.x, u.y) && region.region.contains(v.x, v.y) {
                params.edge_p[i] = Some(region.p);
            }
        }
    }
    params.node_q = ov.q;
    params
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{make_grid, EdgeId};

    fn entry(start_slot: u64, overrides: Overrides) -> ScheduleEntry {
        ScheduleEntry {
            start_slot,
            overrides,
        }
    }

    fn p_only(p: f64) -> Overrides {
        Overrides {
            p: Some(p),
            ..Default::default()
        }
    }

    #[test]
    fn oscillation_picks_last_entry() {
        let g = make_grid(4, 1, Some(4), 0.5, 0.9).unwrap();
        let s = ParameterSchedule::new(vec![
            entry(0, p_only(0.6)),
            entry(400, p_only(0.9)),
            entry(800, p_only(0.6)),
        ])
        .unwrap();
        let ch = Channel {
            edge: EdgeId(0),
            index: 0,
        };
        assert_eq!(apply_schedule(&g, &s, 450).channel_prob(&g, ch), 0.9);
        assert_eq!(apply_schedule(&g, &s, 399).channel_prob(&g, ch), 0.6);
        assert_eq!(apply_schedule(&g, &s, 800).channel_prob(&g, ch), 0.6);
    }

    #[test]
    fn empty_schedule_is_identity() {
        let g = make_grid(4, 1, Some(4), 0.7, 0.9).unwrap();
        let params = apply_schedule(&g, &ParameterSchedule::empty(), 123);
        for e in g.edges() {
            for i in 0..e.width() {
                let ch = Channel {
                    edge: e.id,
                    index: i,
                };
                assert_eq!(params.channel_prob(&g, ch), 0.7);
            }
        }
        assert_eq!(params.fusion_prob(&g, NodeId(0)), 0.9);
    }

    #[test]
    fn region_override_spares_boundary_edges() {
        // 4x4 grid spans y in [0,3]; lower half y <= 1, upper half y >= 2.
        let g = make_grid(4, 1, Some(4), 0.9, 0.9).unwrap();
        let s = ParameterSchedule::new(vec![entry(
            0,
            Overrides {
                regions: vec![
                    RegionOverride {
                        region: Rect {
                            x_min: -1.0,
                            x_max: 4.0,
                            y_min: -1.0,
                            y_max: 1.0,
                        },
                        p: 0.3,
                    },
                    RegionOverride {
                        region: Rect {
                            x_min: -1.0,
                            x_max: 4.0,
                            y_min: 2.0,
                            y_max: 4.0,
                        },
                        p: 0.6,
                    },
                ],
                ..Default::default()
            },
        )])
        .unwrap();
        let params = apply_schedule(&g, &s, 10);
        for e in g.edges() {
            let u = g.node(e.endpoints.0);
            let v = g.node(e.endpoints.1);
            let ch = Channel {
                edge: e.id,
                index: 0,
            };
            let p = params.channel_prob(&g, ch);
            if u.y <= 1.0 && v.y <= 1.0 {
                assert_eq!(p, 0.3);
            } else if u.y >= 2.0 && v.y >= 2.0 {
                assert_eq!(p, 0.6);
            } else {
                assert_eq!(p, 0.9, "boundary edge must keep base p");
            }
        }
    }

    #[test]
    fn apply_is_pure() {
        let g = make_grid(3, 2, Some(4), 0.4, 0.8).unwrap();
        let s = ParameterSchedule::new(vec![entry(
            5,
            Overrides {
                e_p: Some(0.5),
                q: Some(0.7),
                ..Default::default()
            },
        )])
        .unwrap();
        let a = apply_schedule(&g, &s, 9);
        let b = apply_schedule(&g, &s, 9);
        assert_eq!(a, b);
        // Before the first entry, base parameters apply.
        let before = apply_schedule(&g, &s, 4);
        assert_eq!(
            before.channel_prob(
                &g,
                Channel {
                    edge: EdgeId(0),
                    index: 1
                }
            ),
            0.4
        );
    }

    #[test]
    fn rejects_unsorted_and_conflicting_entries() {
        assert!(
            ParameterSchedule::new(vec![entry(5, p_only(0.5)), entry(5, p_only(0.6))]).is_err()
        );
        assert!(ParameterSchedule::new(vec![entry(
            0,
            Overrides {
                p: Some(0.5),
                e_p: Some(0.6),
                ..Default::default()
            }
        )])
        .is_err());
    }
}
