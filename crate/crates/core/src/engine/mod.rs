//! The time-slot simulation loop: request generation, per-slot routing and
//! percolation, per-epoch stats and reconfiguration, metric logging.

mod metrics;

pub use metrics::{
    summarize, ClusterEpochStats, ClusteringSnapshot, DistanceBucket, EpochRecord, HalfPlaneSizes,
    LatencyStats, MetricsLog, Report, RequestRecord, SlotRecord, WindowThroughput,
};

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cluster::{
    reconfigure, ClusterId, ClusterStats, Clustering, ReconfigConfig, ThresholdTable,
};
use crate::error::{Error, Result};
use crate::percolate::{cluster_pass, end_to_end_success, simulate_attempt};
use crate::rng;
use crate::route::{assign_qubits, select_paths, Request, RequestId};
use crate::topo::{apply_schedule, NetworkGraph, NodeId, ParameterSchedule};

/// How clusters are managed over the run.
#[derive(Clone, Debug, PartialEq)]
pub enum ClusterMode {
    /// Start from a single whole-network cluster and reconfigure at every
    /// epoch boundary using the given thresholds.
    Adaptive { thresholds: ThresholdTable },
    /// Fixed partition, never reconfigured.
    Static { partition: StaticPartition },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StaticPartition {
    Single,
    Singletons,
    GridSquares { side: u32, cluster_side: u32 },
    Explicit(Vec<Vec<u32>>),
}

impl StaticPartition {
    fn build(&self, graph: &NetworkGraph) -> Result<Clustering> {
        match self {
            StaticPartition::Single => Ok(Clustering::single(graph)),
            StaticPartition::Singletons => Ok(Clustering::singletons(graph)),
            StaticPartition::GridSquares { side, cluster_side } => {
                Clustering::grid_squares(graph, *side, *cluster_side)
            }
            StaticPartition::Explicit(parts) => {
                let parts: Vec<BTreeSet<NodeId>> = parts
                    .iter()
                    .map(|p| p.iter().map(|n| NodeId(*n)).collect())
                    .collect();
                Clustering::from_partition(graph, parts)
            }
        }
    }
}

/// Source-destination sampling for new requests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestDistribution {
    /// S-D pairs uniformly at random (duplicates allowed).
    #[default]
    Uniform,
    /// Half the requests at 25% of the network diameter, half at 75%.
    Bimodal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub slots: u64,
    pub epoch_length: u64,
    pub queue_capacity: u32,
    /// Girvan-Newman split arity (k).
    pub split_arity: u32,
    pub seed: u64,
    pub mode: ClusterMode,
    pub request_distribution: RequestDistribution,
    /// Restrict the qubit-assignment edge set to consecutive path clusters
    /// (the default also covers edges between non-consecutive ones).
    pub consecutive_only_edges: bool,
}

impl SimConfig {
    pub fn new(slots: u64, seed: u64, mode: ClusterMode) -> Self {
        Self {
            slots,
            epoch_length: 500,
            queue_capacity: 10,
            split_arity: 4,
            seed,
            mode,
            request_distribution: RequestDistribution::Uniform,
            consecutive_only_edges: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLevel {
    Routing,
    Full,
}

/// JSON-lines trace sink for routing/percolation events.
pub struct TraceSink {
    pub level: TraceLevel,
    pub out: Box<dyn Write>,
}

/// One run's mutable state. Use [`run`](Simulation::run) for a full run or
/// [`run_epoch`](Simulation::run_epoch) to drive epochs one at a time.
pub struct Simulation<'g> {
    graph: &'g NetworkGraph,
    schedule: &'g ParameterSchedule,
    cfg: SimConfig,
    clustering: Clustering,
    stats: BTreeMap<ClusterId, ClusterStats>,
    queue: VecDeque<Request>,
    log: MetricsLog,
    slot: u64,
    epoch_index: u64,
    epoch_start_slot: u64,
    next_request: u64,
    distances: DistanceTable,
    pairs_by_distance: Vec<Vec<(NodeId, NodeId)>>,
    diameter: u32,
    trace: Option<TraceSink>,
    started: bool,
}

impl<'g> Simulation<'g> {
    pub fn new(
        graph: &'g NetworkGraph,
        schedule: &'g ParameterSchedule,
        cfg: SimConfig,
    ) -> Result<Self> {
        if graph.node_count() < 2 {
            return Err(Error::InvalidConfig(
                "simulation needs at least two nodes".into(),
            ));
        }
        let distances = DistanceTable::build(graph)?;
        let diameter = distances.diameter();
        let pairs_by_distance = match cfg.request_distribution {
            RequestDistribution::Uniform => Vec::new(),
            RequestDistribution::Bimodal => distances.pairs_by_distance(),
        };
        let clustering = match &cfg.mode {
            ClusterMode::Adaptive { .. } => Clustering::single(graph),
            ClusterMode::Static { partition } => partition.build(graph)?,
        };
        Ok(Self {
            graph,
            schedule,
            cfg,
            clustering,
            stats: BTreeMap::new(),
            queue: VecDeque::new(),
            log: MetricsLog::default(),
            slot: 0,
            epoch_index: 0,
            epoch_start_slot: 0,
            next_request: 0,
            distances,
            pairs_by_distance,
            diameter,
            trace: None,
            started: false,
        })
    }

    pub fn set_trace(&mut self, sink: TraceSink) {
        self.trace = Some(sink);
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn into_log(self) -> MetricsLog {
        self.log
    }

    pub fn current_slot(&self) -> u64 {
        self.slot
    }

    /// Run `cfg.slots` slots with an epoch boundary every
    /// `cfg.epoch_length`; a trailing partial epoch is logged without
    /// reconfiguration.
    pub fn run(mut self) -> Result<MetricsLog> {
        while self.slot < self.cfg.slots {
            self.run_slot()?;
            if self.slot % self.cfg.epoch_length == 0 {
                self.end_epoch()?;
            }
        }
        if self.slot > self.epoch_start_slot {
            self.push_epoch_record();
        }
        Ok(self.log)
    }

    /// Run exactly one epoch (ignores `cfg.slots`), reconfiguring at its
    /// end in adaptive mode. Returns the epoch's record.
    pub fn run_epoch(&mut self) -> Result<&EpochRecord> {
        for _ in 0..self.cfg.epoch_length {
            self.run_slot()?;
        }
        self.end_epoch()?;
        Ok(self.log.epochs.last().expect("epoch record just pushed"))
    }

    fn ensure_started(&mut self) {
        if self.started {
            return;
        }
        self.started = true;
        self.refill_queue(0);
        self.snapshot_clustering(0);
    }

    fn snapshot_clustering(&mut self, active_from_slot: u64) {
        let assignment = (0..self.graph.node_count())
            .map(|i| self.clustering.cluster_of(NodeId(i as u32)))
            .collect();
        self.log.snapshots.push(ClusteringSnapshot {
            active_from_slot,
            assignment,
        });
    }

    /// Advance one slot: apply the schedule, select paths, assign qubits,
    /// sample links and fusions, record passes and successes, refill the
    /// queue. Epoch accounting stays with [`run`](Self::run) and
    /// [`run_epoch`](Self::run_epoch).
    pub fn run_slot(&mut self) -> Result<()> {
        self.ensure_started();
        let slot = self.slot;
        let params = apply_schedule(self.graph, self.schedule, slot);
        let pending: Vec<Request> = self.queue.iter().copied().collect();
        let selection = select_paths(&pending, &self.clustering)?;

        let mut satisfied: Vec<RequestId> = Vec::new();
        let mut trace_attempts: Vec<serde_json::Value> = Vec::new();
        for path in &selection.paths {
            let req = pending
                .iter()
                .find(|r| r.id == path.request)
                .expect("selected path belongs to a pending request");
            let mut assign_rng = rng::stream(self.cfg.seed, rng::STREAM_ASSIGN, slot, req.id.0);
            let assignment = assign_qubits(
                self.graph,
                &self.clustering,
                path,
                self.cfg.consecutive_only_edges,
                &mut assign_rng,
            );
            let mut link_rng = rng::stream(self.cfg.seed, rng::STREAM_LINKS, slot, req.id.0);
            let mut fusion_rng = rng::stream(self.cfg.seed, rng::STREAM_FUSIONS, slot, req.id.0);
            let outcome = simulate_attempt(
                self.graph,
                &params,
                &assignment.assigned,
                &mut link_rng,
                &mut fusion_rng,
            )?;
            let success =
                end_to_end_success(&outcome.link_graph, self.graph, req.source, req.destination);
            let segments: Vec<&BTreeSet<NodeId>> = path
                .clusters
                .iter()
                .map(|c| self.clustering.members(*c))
                .collect();
            let mut passes = Vec::with_capacity(segments.len());
            for i in 0..segments.len() {
                let pass = cluster_pass(
                    &outcome.link_graph,
                    self.graph,
                    &segments,
                    req.source,
                    req.destination,
                    i,
                )?;
                passes.push(pass);
                let st = self.stats.entry(path.clusters[i]).or_default();
                st.attempts += 1;
                if pass {
                    st.passes += 1;
                }
            }
            if success {
                satisfied.push(req.id);
            }
            if matches!(
                self.trace,
                Some(TraceSink {
                    level: TraceLevel::Full,
                    ..
                })
            ) {
                trace_attempts.push(json!({
                    "id": req.id.0,
                    "links": outcome.links.iter().map(|l| json!({
                        "edge": l.channel.edge.0, "ch": l.channel.index, "up": l.success
                    })).collect::<Vec<_>>(),
                    "fusions": outcome.fusions.iter().map(|f| json!({
                        "node": f.node.0,
                        "links": f.links.iter().map(|c| json!([c.edge.0, c.index])).collect::<Vec<_>>(),
                        "success": f.success,
                        "tier": f.tier,
                    })).collect::<Vec<_>>(),
                    "passes": passes,
                    "success": success,
                }));
            }
        }

        if let Some(sink) = &mut self.trace {
            let mut line = json!({
                "slot": slot,
                "queue": pending.iter().map(|r| json!({
                    "id": r.id.0, "s": r.source.0, "d": r.destination.0
                })).collect::<Vec<_>>(),
                "served": selection.paths.iter().map(|p| json!({
                    "id": p.request.0,
                    "path": p.clusters.iter().map(|c| c.0).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
                "skipped": selection.skipped.iter().map(|r| r.0).collect::<Vec<_>>(),
            });
            if matches!(sink.level, TraceLevel::Full) {
                line["attempts"] = serde_json::Value::Array(trace_attempts);
            }
            writeln!(sink.out, "{line}")?;
        }

        for id in &satisfied {
            self.queue.retain(|r| r.id != *id);
            self.log.requests[id.0 as usize].satisfied_slot = Some(slot);
        }
        self.log.slots.push(SlotRecord {
            slot,
            attempted: selection.paths.len() as u32,
            satisfied: satisfied.len() as u32,
        });
        self.slot += 1;
        self.refill_queue(self.slot);
        Ok(())
    }

    fn push_epoch_record(&mut self) {
        let clusters = self
            .clustering
            .cluster_ids()
            .map(|id| {
                let st = self.stats.get(&id).copied().unwrap_or_default();
                ClusterEpochStats {
                    cluster: id,
                    size: self.clustering.size(id) as u32,
                    attempts: st.attempts,
                    passes: st.passes,
                }
            })
            .collect();
        self.log.epochs.push(EpochRecord {
            epoch: self.epoch_index,
            first_slot: self.epoch_start_slot,
            slots: self.slot - self.epoch_start_slot,
            clusters,
        });
    }

    fn end_epoch(&mut self) -> Result<()> {
        self.push_epoch_record();
        if let ClusterMode::Adaptive { thresholds } = &self.cfg.mode {
            let rc = ReconfigConfig {
                split_arity: self.cfg.split_arity,
                epoch_length: self.cfg.epoch_length,
            };
            self.clustering =
                reconfigure(&self.clustering, &self.stats, thresholds, &rc, self.graph)?;
            self.snapshot_clustering(self.slot);
        }
        self.stats.clear();
        self.epoch_index += 1;
        self.epoch_start_slot = self.slot;
        Ok(())
    }

    fn refill_queue(&mut self, arrival_slot: u64) {
        while (self.queue.len() as u32) < self.cfg.queue_capacity {
            self.generate_request(arrival_slot);
        }
    }

    fn generate_request(&mut self, arrival_slot: u64) {
        let id = RequestId(self.next_request);
        let mut rng = rng::stream(self.cfg.seed, rng::STREAM_REQUESTS, self.next_request, 0);
        self.next_request += 1;
        let n = self.graph.node_count() as u32;
        let (source, destination) = match self.cfg.request_distribution {
            RequestDistribution::Uniform => {
                let s = NodeId(rng.gen_range(0..n));
                let d = loop {
                    let d = NodeId(rng.gen_range(0..n));
                    if d != s {
                        break d;
                    }
                };
                (s, d)
            }
            RequestDistribution::Bimodal => {
                let quarter = ((self.diameter as f64) * 0.25).round().max(1.0) as usize;
                let three_quarter = ((self.diameter as f64) * 0.75).round().max(1.0) as usize;
                let target = if rng.gen_bool(0.5) {
                    quarter
                } else {
                    three_quarter
                };
                let bucket = self.nearest_nonempty_bucket(target);
                let &(u, v) = &self.pairs_by_distance[bucket]
                    [rng.gen_range(0..self.pairs_by_distance[bucket].len())];
                if rng.gen_bool(0.5) {
                    (u, v)
                } else {
                    (v, u)
                }
            }
        };
        let request = Request {
            id,
            source,
            destination,
            arrival_slot,
        };
        self.queue.push_back(request);
        self.log.requests.push(RequestRecord {
            id,
            source,
            destination,
            arrival_slot,
            satisfied_slot: None,
            hop_distance: self.distances.get(source, destination),
        });
    }

    fn nearest_nonempty_bucket(&self, target: usize) -> usize {
        let len = self.pairs_by_distance.len();
        for offset in 0..len {
            if target >= offset && !self.pairs_by_distance[target - offset].is_empty() {
                return target - offset;
            }
            if target + offset < len && !self.pairs_by_distance[target + offset].is_empty() {
                return target + offset;
            }
        }
        panic!("connected graph has at least one node pair");
    }
}

/// Run a whole simulation from a config.
pub fn run_simulation(
    graph: &NetworkGraph,
    schedule: &ParameterSchedule,
    cfg: SimConfig,
) -> Result<MetricsLog> {
    Simulation::new(graph, schedule, cfg)?.run()
}

/// All-pairs hop distances (BFS, static topology).
struct DistanceTable {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceTable {
    fn build(graph: &NetworkGraph) -> Result<Self> {
        let n = graph.node_count();
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.clear();
            queue.push_back(NodeId(s as u32));
            while let Some(u) = queue.pop_front() {
                let du = row[u.index()];
                for v in graph.neighbors(u) {
                    if row[v.index()] == u32::MAX {
                        row[v.index()] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
            if row.contains(&u32::MAX) {
                return Err(Error::InvalidConfig(
                    "topology must be connected for simulation".into(),
                ));
            }
        }
        Ok(Self { n, dist })
    }

    fn get(&self, u: NodeId, v: NodeId) -> u32 {
        self.dist[u.index() * self.n + v.index()]
    }

    fn diameter(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    fn pairs_by_distance(&self) -> Vec<Vec<(NodeId, NodeId)>> {
        let mut buckets = vec![Vec::new(); self.diameter() as usize + 1];
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                let d = self.dist[u * self.n + v];
                buckets[d as usize].push((NodeId(u as u32), NodeId(v as u32)));
            }
        }
        buckets
    }
}
