//! Replay session: a built network, its placing nodes fed by the data
//! importer, and a metrics collector.

use std::sync::mpsc::Receiver;
use std::time::Instant;

use crate::adl;
use crate::casas::{replay, Pacing, ReplayEvent, ReplayPlan, ReplayReport, ReplaySink};
use crate::fluent::Statement;
use crate::metrics::{EvalSample, Failure, MetricEvent, RecognitionRecord};
use crate::network::{DefError, Network, NetworkDef, NodeCell};
use crate::placing::{Placer, Topology, DEFAULT_COMPLEXITY_BOUND};
use crate::time::Timestamp;

pub const DEFAULT_IDLE_RESET_MS: u64 = 150_000;
pub const DEFAULT_TAIL_MS: u64 = 180_000;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Def(#[from] DefError),
    #[error("node {node}: {message}")]
    Topology { node: String, message: String },
    #[error("network has no placing node")]
    NoPlacingNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    /// Reset every model node once the stream has been silent this long.
    /// `None` disables it.
    pub idle_reset_ms: Option<u64>,
    /// Timeline time kept running after the last event.
    pub tail_ms: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { idle_reset_ms: Some(DEFAULT_IDLE_RESET_MS), tail_ms: DEFAULT_TAIL_MS }
    }
}

struct PlacingNode {
    cell: NodeCell,
    placer: Placer,
    bound: usize,
}

/// Everything a replay produced.
#[derive(Debug, Clone, Default)]
pub struct SessionOutput {
    pub recognitions: Vec<RecognitionRecord>,
    pub samples: Vec<EvalSample>,
    pub failures: Vec<Failure>,
    pub report: ReplayReport,
    pub idle_resets: usize,
    /// Largest placing-node complexity observed, and how often it broke its bound.
    pub placing_peak: usize,
    pub bound_violations: usize,
    pub unknown_sensors: usize,
}

pub struct Session {
    net: Network,
    rx: Receiver<MetricEvent>,
    placing: Vec<PlacingNode>,
    model_nodes: Vec<NodeCell>,
    config: SessionConfig,
    last_event: Option<Timestamp>,
    idle_pending: bool,
    current_run: Option<usize>,
    started: Instant,
    out: SessionOutput,
}

impl Session {
    /// Builds the network with the ADL procedure implementations and loads
    /// every placing node's topology.
    pub fn new(def: &NetworkDef, config: SessionConfig) -> Result<Session, SessionError> {
        let (net, rx) = def.build(adl::registry())?;
        let mut placing = Vec::new();
        for nd in def.placing_nodes() {
            let reference = nd.topology.as_deref().unwrap_or_default();
            let text = def.read_source(reference)?;
            let topology: Topology = text
                .parse()
                .map_err(|e: crate::placing::TopologyError| SessionError::Topology {
                    node: nd.id.clone(),
                    message: e.to_string(),
                })?;
            let cell = net.node(&nd.id).expect("built nodes are registered").clone();
            placing.push(PlacingNode {
                cell,
                placer: Placer::new(topology),
                bound: nd.complexity_bound.unwrap_or(DEFAULT_COMPLEXITY_BOUND),
            });
        }
        if placing.is_empty() {
            return Err(SessionError::NoPlacingNode);
        }
        let model_nodes = net
            .node_ids()
            .filter_map(|id| net.node(id))
            .filter(|cell| !cell.read().models.is_empty())
            .cloned()
            .collect();
        Ok(Session {
            net,
            rx,
            placing,
            model_nodes,
            config,
            last_event: None,
            idle_pending: false,
            current_run: None,
            started: Instant::now(),
            out: SessionOutput::default(),
        })
    }

    /// The CASAS network from compiled-in assets.
    pub fn builtin(config: SessionConfig) -> Result<Session, SessionError> {
        Session::new(&adl::builtin_network(), config)
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    /// Replays the plan and returns what was collected. The network keeps
    /// its state afterwards and can be inspected.
    pub fn run(&mut self, plan: &ReplayPlan, pacing: Pacing) -> SessionOutput {
        self.started = Instant::now();
        let tail = self.config.tail_ms;
        let report = replay(plan, pacing, tail, self);
        self.drain();
        self.out.failures = self.net.failures().to_vec();
        self.out.report = report;
        std::mem::take(&mut self.out)
    }

    fn idle_deadline(&self) -> Option<Timestamp> {
        match (self.idle_pending, self.last_event, self.config.idle_reset_ms) {
            (true, Some(t), Some(idle)) => Some(t + idle),
            _ => None,
        }
    }

    fn idle_reset(&mut self, at: Timestamp) {
        self.idle_pending = false;
        self.out.idle_resets += 1;
        for cell in &self.model_nodes {
            let mut node = cell.write();
            node.reset(Some(at));
            let sample = node.record(at, 0, 0);
            self.out.samples.push(sample);
        }
    }

    fn drain(&mut self) {
        let wall = self.started.elapsed().as_millis() as u64;
        while let Ok(ev) = self.rx.try_recv() {
            match ev {
                MetricEvent::Eval(s) => self.out.samples.push(s),
                MetricEvent::Recognition(mut r) => {
                    r.wall_ms = wall;
                    r.run = self.current_run;
                    self.out.recognitions.push(r);
                }
                // failures are copied from the network at the end
                MetricEvent::Failure(_) => {}
            }
        }
    }
}

impl ReplaySink for Session {
    fn advance_to(&mut self, now: Timestamp) {
        loop {
            let poll = self.net.next_deadline().filter(|d| *d <= now);
            let idle = self.idle_deadline().filter(|d| *d <= now);
            match (poll, idle) {
                (Some(p), Some(i)) if i <= p => self.idle_reset(i),
                (None, Some(i)) => self.idle_reset(i),
                (Some(p), _) => {
                    self.net.tick(p);
                    self.drain();
                }
                (None, None) => break,
            }
        }
        self.net.tick(now);
        self.drain();
    }

    fn next_deadline(&self) -> Option<Timestamp> {
        match (self.net.next_deadline(), self.idle_deadline()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn deliver(&mut self, event: &ReplayEvent) {
        let ev = &event.event;
        self.last_event = Some(ev.time);
        self.idle_pending = true;
        self.current_run = Some(event.run);
        for p in &mut self.placing {
            let started = Instant::now();
            let mut node = p.cell.write();
            let st = Statement::sensor(ev.sensor.clone(), ev.value, ev.time);
            let report = p.placer.ingest(&mut node, [st]);
            let ns = started.elapsed().as_nanos() as u64;
            if report.dropped > 0 {
                self.out.unknown_sensors += report.dropped;
                continue;
            }
            let sample = node.record(ev.time, ns, report.written);
            self.out.placing_peak = self.out.placing_peak.max(sample.complexity);
            if sample.complexity > p.bound {
                self.out.bound_violations += 1;
            }
            self.out.samples.push(sample);
        }
    }
}
