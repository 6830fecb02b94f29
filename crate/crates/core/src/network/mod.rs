//! Nodes, conditions, events and procedures, plus the scheduler that polls
//! conditions and dispatches procedures on rising edges.
//!
//! A procedure is runnable when at least one of its events holds; an event
//! holds when every one of its conditions is ⊤. Conditions are shared: two
//! procedures that declare the same check observe one poll.
//!
//! Condition lifecycles are managed by a procedure of the network itself.
//! Registering a condition adds a `NewCondition` statement to the `core`
//! node; the core manager notices it, starts a periodic evaluator and
//! reclassifies the statement as a plain `Condition`. Deregistration works
//! the same way through `OldCondition`.

mod def;
mod node;
mod procedure;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;

use rayon::prelude::*;

pub use def::{DefError, NetworkDef, NodeDef};
pub use node::{Node, NodeCell, NodeEvaluation, NodeMetrics};
pub use procedure::{
    ConditionSpec, EventSpec, Factory, ImplementationRegistry, Outcome, ProcContext, Procedure,
    ProcedureError, ProcedureSpec, DEFAULT_FREQUENCY,
};
use procedure::Command;

use crate::fluent::{Statement, StorePolicy};
use crate::metrics::{Failure, MetricEvent};
use crate::time::Timestamp;

pub const CORE_NODE: &str = "core";
pub const CORE_MANAGER: &str = "core-manager";
/// Poll rate of the core manager's own conditions.
pub const CORE_FREQUENCY: u32 = 10;
/// Delay before retrying a poll that found its node locked.
pub const RETRY_MS: u64 = 10;

pub const TAG_CONDITION: &str = "Condition";
pub const TAG_NEW_CONDITION: &str = "NewCondition";
pub const TAG_OLD_CONDITION: &str = "OldCondition";
/// Reserved tag for synchronization statements between procedures.
pub const TAG_SEMAPHORE: &str = "Semaphore";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetworkError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate procedure id `{0}`")]
    DuplicateProcedure(String),
    #[error("unknown implementation `{0}`")]
    UnknownImplementation(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown procedure `{0}`")]
    UnknownProcedure(String),
    #[error("procedure `{id}`: {reason}")]
    InvalidProcedure { id: String, reason: String },
}

/// True iff every condition holds.
pub fn event_holds(conditions: &[bool]) -> bool {
    conditions.iter().all(|c| *c)
}

/// True iff at least one event holds.
pub fn procedure_runnable<E: AsRef<[bool]>>(events: &[E]) -> bool {
    events.iter().any(|e| event_holds(e.as_ref()))
}

#[derive(Debug)]
struct ConditionSlot {
    spec: ConditionSpec,
    state: bool,
    polling: bool,
    next_due: Timestamp,
    refs: usize,
    polls: u64,
    delayed: u64,
    events: Vec<usize>,
}

#[derive(Debug)]
struct EventSlot {
    conditions: Vec<usize>,
    procedure: usize,
    state: bool,
}

struct ProcedureSlot {
    spec: ProcedureSpec,
    body: Arc<dyn Procedure>,
    events: Vec<usize>,
    active: bool,
    latched: bool,
    rearm: bool,
    dispatches: u64,
}

// procedure index, its result, and what it emitted and requested
type ExecResult = (usize, Result<Outcome, String>, Vec<MetricEvent>, Vec<Command>);

/// One execution performed by [`Network::tick`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub procedure: String,
    pub at: Timestamp,
    pub ok: bool,
}

pub struct Network {
    nodes: BTreeMap<String, NodeCell>,
    registry: ImplementationRegistry,
    conditions: Vec<ConditionSlot>,
    condition_ids: HashMap<ConditionSpec, usize>,
    events: Vec<EventSlot>,
    procedures: Vec<ProcedureSlot>,
    metrics: Sender<MetricEvent>,
    failures: Vec<Failure>,
    now: Timestamp,
}

impl std::fmt::Debug for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("nodes", &self.nodes.keys().collect::<Vec<_>>())
            .field("procedures", &self.procedures.len())
            .field("conditions", &self.conditions.len())
            .finish()
    }
}

fn condition_statement(id: usize) -> String {
    format!("c{id}")
}

fn core_manager(ctx: &mut ProcContext<'_>) -> Result<Outcome, ProcedureError> {
    let mut core = ctx.target.write();
    let pending: Vec<(usize, bool)> = core
        .store
        .iter()
        .filter_map(|st| {
            let id = st.name.strip_prefix('c')?.parse().ok()?;
            if st.has_tag(TAG_NEW_CONDITION) {
                Some((id, true))
            } else if st.has_tag(TAG_OLD_CONDITION) {
                Some((id, false))
            } else {
                None
            }
        })
        .collect();
    for (id, start) in pending {
        let name = condition_statement(id);
        if start {
            ctx.command(Command::StartPolling(id));
            let plain = Statement::new(name, true, ctx.now, crate::fluent::Provenance::Procedure)
                .with_tag(TAG_CONDITION);
            core.store.insert(plain);
        } else {
            ctx.command(Command::StopPolling(id));
            core.store.remove_named(&name);
        }
    }
    core.refresh();
    Ok(Outcome::done())
}

impl Network {
    /// A network holding only the core node and its manager. Metrics from
    /// every procedure arrive on the returned receiver.
    pub fn new(registry: ImplementationRegistry) -> (Network, Receiver<MetricEvent>) {
        let (tx, rx) = channel();
        let mut net = Network {
            nodes: BTreeMap::new(),
            registry,
            conditions: Vec::new(),
            condition_ids: HashMap::new(),
            events: Vec::new(),
            procedures: Vec::new(),
            metrics: tx,
            failures: Vec::new(),
            now: Timestamp::ZERO,
        };
        net.nodes.insert(
            CORE_NODE.to_string(),
            Node::new(CORE_NODE, StorePolicy::Overwrite).into_cell(),
        );
        let spec = ProcedureSpec {
            id: CORE_MANAGER.to_string(),
            implementation: CORE_MANAGER.to_string(),
            target: CORE_NODE.to_string(),
            params: toml::Table::new(),
            events: vec![
                vec![ConditionSpec::tag(CORE_NODE, TAG_NEW_CONDITION).at(CORE_FREQUENCY)],
                vec![ConditionSpec::tag(CORE_NODE, TAG_OLD_CONDITION).at(CORE_FREQUENCY)],
            ],
        };
        // the manager cannot start its own evaluators, so they are bootstrapped
        let events = spec.events.clone();
        net.attach(spec, Arc::new(core_manager), &events, true);
        (net, rx)
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn register_node(&mut self, node: Node) -> Result<NodeCell, NetworkError> {
        if self.nodes.contains_key(&node.id) {
            return Err(NetworkError::DuplicateNode(node.id));
        }
        let id = node.id.clone();
        let cell = node.into_cell();
        self.nodes.insert(id, cell.clone());
        Ok(cell)
    }

    pub fn node(&self, id: &str) -> Option<&NodeCell> {
        self.nodes.get(id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn register_procedure(&mut self, spec: ProcedureSpec) -> Result<(), NetworkError> {
        if self.procedures.iter().any(|p| p.active && p.spec.id == spec.id) {
            return Err(NetworkError::DuplicateProcedure(spec.id));
        }
        if !self.nodes.contains_key(&spec.target) {
            return Err(NetworkError::UnknownNode(spec.target));
        }
        let invalid = |reason: &str| NetworkError::InvalidProcedure {
            id: spec.id.clone(),
            reason: reason.to_string(),
        };
        if spec.events.is_empty() {
            return Err(invalid("no events"));
        }
        for cond in spec.events.iter().flatten() {
            if !self.nodes.contains_key(&cond.node) {
                return Err(NetworkError::UnknownNode(cond.node.clone()));
            }
            if cond.frequency == 0 {
                return Err(invalid("condition frequency must be at least 1"));
            }
            if cond.name.is_none() && cond.tag.is_none() {
                return Err(invalid("condition needs a name or a tag"));
            }
        }
        if spec.events.iter().any(Vec::is_empty) {
            return Err(invalid("event without conditions"));
        }
        let body = self.registry.build(&spec)?;
        let events = spec.events.clone();
        self.attach(spec, body, &events, false);
        Ok(())
    }

    fn attach(
        &mut self,
        spec: ProcedureSpec,
        body: Arc<dyn Procedure>,
        events: &[EventSpec],
        bootstrap: bool,
    ) {
        let pid = self.procedures.len();
        let mut event_ids = Vec::new();
        for event in events {
            let eid = self.events.len();
            let mut conds = Vec::new();
            for cond in event {
                let cid = self.condition_slot(cond, bootstrap);
                self.conditions[cid].events.push(eid);
                if !conds.contains(&cid) {
                    conds.push(cid);
                }
            }
            let state = conds.iter().all(|c| self.conditions[*c].state);
            self.events.push(EventSlot { conditions: conds, procedure: pid, state });
            event_ids.push(eid);
        }
        self.procedures.push(ProcedureSlot {
            spec,
            body,
            events: event_ids,
            active: true,
            latched: false,
            rearm: false,
            dispatches: 0,
        });
    }

    fn condition_slot(&mut self, spec: &ConditionSpec, bootstrap: bool) -> usize {
        let cid = match self.condition_ids.get(spec) {
            Some(&cid) => cid,
            None => {
                let cid = self.conditions.len();
                self.conditions.push(ConditionSlot {
                    spec: spec.clone(),
                    state: false,
                    polling: bootstrap,
                    next_due: self.now,
                    refs: 0,
                    polls: 0,
                    delayed: 0,
                    events: Vec::new(),
                });
                self.condition_ids.insert(spec.clone(), cid);
                cid
            }
        };
        let slot = &mut self.conditions[cid];
        slot.refs += 1;
        if !bootstrap && slot.refs == 1 {
            // new, or revived before the manager stopped it
            let tag = if slot.polling { TAG_CONDITION } else { TAG_NEW_CONDITION };
            self.announce(cid, &[TAG_CONDITION, tag]);
        }
        cid
    }

    fn announce(&self, cid: usize, tags: &[&str]) {
        let st = Statement::new(
            condition_statement(cid),
            true,
            self.now,
            crate::fluent::Provenance::Procedure,
        )
        .with_tags(tags.iter().copied());
        self.nodes[CORE_NODE].write().insert(st);
    }

    /// Removes a procedure. Conditions no longer referenced by any procedure
    /// are stopped by the core manager on its next run.
    pub fn deregister_procedure(&mut self, id: &str) -> Result<(), NetworkError> {
        let pid = self
            .procedures
            .iter()
            .position(|p| p.active && p.spec.id == id && p.spec.id != CORE_MANAGER)
            .ok_or_else(|| NetworkError::UnknownProcedure(id.to_string()))?;
        self.procedures[pid].active = false;
        let conds: Vec<usize> = self.procedures[pid]
            .events
            .iter()
            .flat_map(|e| self.events[*e].conditions.clone())
            .collect();
        for cid in conds {
            let slot = &mut self.conditions[cid];
            slot.refs = slot.refs.saturating_sub(1);
            if slot.refs == 0 {
                self.announce(cid, &[TAG_CONDITION, TAG_OLD_CONDITION]);
            }
        }
        Ok(())
    }

    /// Existence check against the node; `None` when the node is write-locked.
    pub fn evaluate_condition(&self, spec: &ConditionSpec) -> Result<Option<bool>, NetworkError> {
        let cell = self
            .nodes
            .get(&spec.node)
            .ok_or_else(|| NetworkError::UnknownNode(spec.node.clone()))?;
        Ok(cell
            .try_read()
            .map(|node| node.store.exists(spec.name.as_deref(), spec.tag.as_deref())))
    }

    /// Ids of procedures with at least one event holding, per the last polls.
    pub fn runnable(&self) -> Vec<&str> {
        self.procedures
            .iter()
            .filter(|p| p.active && p.events.iter().any(|e| self.events[*e].state))
            .map(|p| p.spec.id.as_str())
            .collect()
    }

    /// Earliest pending poll.
    pub fn next_deadline(&self) -> Option<Timestamp> {
        self.conditions
            .iter()
            .filter(|c| c.polling)
            .map(|c| c.next_due)
            .min()
    }

    /// Polls conditions due at `now`, then dispatches procedures whose
    /// runnability rose. Executions targeting distinct nodes run in parallel.
    pub fn tick(&mut self, now: Timestamp) -> Vec<Execution> {
        if now > self.now {
            self.now = now;
        }
        let now = self.now;
        let mut polled = vec![false; self.procedures.len()];
        let mut dirty = Vec::new();
        for cid in 0..self.conditions.len() {
            let slot = &self.conditions[cid];
            if !slot.polling || slot.next_due > now {
                continue;
            }
            let result = self.evaluate_condition(&slot.spec).ok().flatten();
            let slot = &mut self.conditions[cid];
            let Some(state) = result else {
                slot.delayed += 1;
                slot.next_due = now + RETRY_MS;
                continue;
            };
            slot.polls += 1;
            let period = slot.spec.period_ms();
            slot.next_due = slot.next_due + period;
            if slot.next_due <= now {
                slot.next_due = now + period;
            }
            for &e in &slot.events {
                polled[self.events[e].procedure] = true;
            }
            if slot.state != state {
                slot.state = state;
                dirty.extend(slot.events.iter().copied());
            }
        }
        self.recompute(&dirty);

        let mut dispatch = Vec::new();
        for (pid, p) in self.procedures.iter_mut().enumerate() {
            if !p.active {
                continue;
            }
            let runnable = p.events.iter().any(|e| self.events[*e].state);
            if !runnable {
                p.latched = false;
                p.rearm = false;
            } else if !p.latched || (p.rearm && polled[pid]) {
                p.latched = true;
                p.rearm = false;
                p.dispatches += 1;
                dispatch.push(pid);
            }
        }
        self.execute(dispatch, now)
    }

    fn recompute(&mut self, dirty: &[usize]) {
        for &e in dirty {
            let state = self.events[e]
                .conditions
                .iter()
                .all(|c| self.conditions[*c].state);
            self.events[e].state = state;
        }
    }

    fn execute(&mut self, dispatch: Vec<usize>, now: Timestamp) -> Vec<Execution> {
        if dispatch.is_empty() {
            return Vec::new();
        }
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &pid in &dispatch {
            groups.entry(self.procedures[pid].spec.target.as_str()).or_default().push(pid);
        }
        let nodes = &self.nodes;
        let procedures = &self.procedures;
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let mut results: Vec<ExecResult> =
            groups
                .par_iter()
                .flat_map_iter(|group| {
                    group.iter().map(|&pid| {
                        let p = &procedures[pid];
                        let mut ctx = ProcContext {
                            now,
                            procedure: &p.spec.id,
                            target: &nodes[&p.spec.target],
                            nodes,
                            emitted: Vec::new(),
                            commands: Vec::new(),
                        };
                        let result = match catch_unwind(AssertUnwindSafe(|| p.body.run(&mut ctx))) {
                            Ok(Ok(outcome)) => Ok(outcome),
                            Ok(Err(e)) => Err(e.to_string()),
                            Err(panic) => Err(panic_message(panic)),
                        };
                        (pid, result, ctx.emitted, ctx.commands)
                    }).collect::<Vec<_>>()
                })
                .collect();
        results.sort_by_key(|r| r.0);

        let mut executions = Vec::with_capacity(results.len());
        for (pid, result, emitted, commands) in results {
            for ev in emitted {
                let _ = self.metrics.send(ev);
            }
            for cmd in commands {
                self.apply(cmd, now);
            }
            let id = self.procedures[pid].spec.id.clone();
            let ok = result.is_ok();
            match result {
                Ok(outcome) => self.procedures[pid].rearm = outcome.rearm,
                Err(message) => {
                    log::warn!("procedure {id} failed at {now}: {message}");
                    let failure = Failure { procedure: id.clone(), at: now, message };
                    let _ = self.metrics.send(MetricEvent::Failure(failure.clone()));
                    self.failures.push(failure);
                }
            }
            executions.push(Execution { procedure: id, at: now, ok });
        }
        executions
    }

    fn apply(&mut self, cmd: Command, now: Timestamp) {
        match cmd {
            Command::StartPolling(cid) => {
                if let Some(slot) = self.conditions.get_mut(cid) {
                    if !slot.polling {
                        slot.polling = true;
                        slot.next_due = now;
                    }
                }
            }
            Command::StopPolling(cid) => {
                let Some(slot) = self.conditions.get_mut(cid) else {
                    return;
                };
                if slot.refs > 0 {
                    return;
                }
                slot.polling = false;
                if slot.state {
                    slot.state = false;
                    let dirty = slot.events.clone();
                    self.recompute(&dirty);
                }
            }
        }
    }

    pub fn failures(&self) -> &[Failure] {
        &self.failures
    }

    pub fn dispatch_count(&self, procedure: &str) -> u64 {
        self.procedures
            .iter()
            .filter(|p| p.spec.id == procedure)
            .map(|p| p.dispatches)
            .sum()
    }

    pub fn condition_id(&self, spec: &ConditionSpec) -> Option<usize> {
        self.condition_ids.get(spec).copied()
    }

    pub fn poll_count(&self, spec: &ConditionSpec) -> u64 {
        self.condition_id(spec).map_or(0, |c| self.conditions[c].polls)
    }

    pub fn delayed_polls(&self, spec: &ConditionSpec) -> u64 {
        self.condition_id(spec).map_or(0, |c| self.conditions[c].delayed)
    }

    pub fn is_polling(&self, spec: &ConditionSpec) -> bool {
        self.condition_id(spec).is_some_and(|c| self.conditions[c].polling)
    }

    /// Number of conditions with a running evaluator, the core manager's included.
    pub fn active_evaluators(&self) -> usize {
        self.conditions.iter().filter(|c| c.polling).count()
    }

    pub fn procedure_ids(&self) -> impl Iterator<Item = &str> {
        self.procedures
            .iter()
            .filter(|p| p.active)
            .map(|p| p.spec.id.as_str())
    }

    pub fn procedure_spec(&self, id: &str) -> Option<&ProcedureSpec> {
        self.procedures
            .iter()
            .find(|p| p.active && p.spec.id == id)
            .map(|p| &p.spec)
    }
}

fn panic_message(panic: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = panic.downcast_ref::<&str>() {
        format!("panicked: {s}")
    } else if let Some(s) = panic.downcast_ref::<String>() {
        format!("panicked: {s}")
    } else {
        "panicked".to_string()
    }
}
