use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::node::NodeCell;
use super::NetworkError;
use crate::metrics::MetricEvent;
use crate::time::Timestamp;

/// A polled existence check: does `node` hold a statement with this name
/// and/or tag? State and time of the matching statement are never read.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Polls per second of timeline time.
    #[serde(default = "default_frequency")]
    pub frequency: u32,
}

pub const DEFAULT_FREQUENCY: u32 = 2;

fn default_frequency() -> u32 {
    DEFAULT_FREQUENCY
}

impl ConditionSpec {
    pub fn tag(node: impl Into<String>, tag: impl Into<String>) -> Self {
        ConditionSpec {
            node: node.into(),
            name: None,
            tag: Some(tag.into()),
            frequency: DEFAULT_FREQUENCY,
        }
    }

    pub fn name(node: impl Into<String>, name: impl Into<String>) -> Self {
        ConditionSpec {
            node: node.into(),
            name: Some(name.into()),
            tag: None,
            frequency: DEFAULT_FREQUENCY,
        }
    }

    pub fn at(mut self, frequency: u32) -> Self {
        self.frequency = frequency;
        self
    }

    /// Poll period in milliseconds.
    pub fn period_ms(&self) -> u64 {
        (1000 / u64::from(self.frequency.max(1))).max(1)
    }
}

impl fmt::Display for ConditionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.node)?;
        if let Some(n) = &self.name {
            write!(f, " name={n}")?;
        }
        if let Some(t) = &self.tag {
            write!(f, " tag={t}")?;
        }
        write!(f, " @{}Hz", self.frequency)
    }
}

/// Conjunction of conditions.
pub type EventSpec = Vec<ConditionSpec>;

/// Declarative form of a procedure: its implementation, the node it writes
/// to, and the events (OR-ed) that trigger it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcedureSpec {
    pub id: String,
    pub implementation: String,
    pub target: String,
    #[serde(default)]
    pub params: toml::Table,
    pub events: Vec<EventSpec>,
}

/// What a finished execution asks of the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outcome {
    /// Dispatch again on the next poll that finds an event still true.
    pub rearm: bool,
}

impl Outcome {
    pub fn done() -> Self {
        Outcome { rearm: false }
    }

    pub fn rearm() -> Self {
        Outcome { rearm: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ProcedureError(pub String);

impl From<crate::rules::EvalError> for ProcedureError {
    fn from(e: crate::rules::EvalError) -> Self {
        ProcedureError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Command {
    StartPolling(usize),
    StopPolling(usize),
}

/// Everything a procedure body can reach during one execution.
pub struct ProcContext<'a> {
    pub now: Timestamp,
    pub procedure: &'a str,
    pub target: &'a NodeCell,
    pub(crate) nodes: &'a BTreeMap<String, NodeCell>,
    pub(crate) emitted: Vec<MetricEvent>,
    pub(crate) commands: Vec<Command>,
}

impl<'a> ProcContext<'a> {
    pub fn node(&self, id: &str) -> Option<&'a NodeCell> {
        self.nodes.get(id)
    }

    /// Queues a metric; the scheduler forwards queued metrics in
    /// registration order once every execution of the tick has finished.
    pub fn emit(&mut self, event: MetricEvent) {
        self.emitted.push(event);
    }

    pub(crate) fn command(&mut self, cmd: Command) {
        self.commands.push(cmd);
    }
}

pub trait Procedure: Send + Sync {
    fn run(&self, ctx: &mut ProcContext<'_>) -> Result<Outcome, ProcedureError>;
}

impl<F> Procedure for F
where
    F: Fn(&mut ProcContext<'_>) -> Result<Outcome, ProcedureError> + Send + Sync,
{
    fn run(&self, ctx: &mut ProcContext<'_>) -> Result<Outcome, ProcedureError> {
        self(ctx)
    }
}

pub type Factory =
    Box<dyn Fn(&ProcedureSpec) -> Result<Arc<dyn Procedure>, String> + Send + Sync>;

/// Maps implementation ids to procedure factories.
#[derive(Default)]
pub struct ImplementationRegistry {
    factories: BTreeMap<String, Factory>,
}

impl ImplementationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, id: impl Into<String>, factory: F) -> &mut Self
    where
        F: Fn(&ProcedureSpec) -> Result<Arc<dyn Procedure>, String> + Send + Sync + 'static,
    {
        self.factories.insert(id.into(), Box::new(factory));
        self
    }

    pub fn contains(&self, id: &str) -> bool {
        self.factories.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &ProcedureSpec) -> Result<Arc<dyn Procedure>, NetworkError> {
        let factory = self
            .factories
            .get(&spec.implementation)
            .ok_or_else(|| NetworkError::UnknownImplementation(spec.implementation.clone()))?;
        factory(spec).map_err(|reason| NetworkError::InvalidProcedure {
            id: spec.id.clone(),
            reason,
        })
    }
}

impl fmt::Debug for ImplementationRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}
