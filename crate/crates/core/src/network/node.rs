use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Instant;

use parking_lot::RwLock;

use crate::fluent::{Statement, StatementStore, StorePolicy, TagRule};
use crate::metrics::EvalSample;
use crate::rules::{evaluate_model, EvalError, Model};
use crate::time::Timestamp;

/// Shared handle to a node. Writers hold the lock for a whole evaluation
/// pass, so condition polls never observe a half-updated store.
pub type NodeCell = Arc<RwLock<Node>>;

const HISTORY_CAP: usize = 1024;

#[derive(Debug, Clone, Default)]
pub struct NodeMetrics {
    pub complexity: usize,
    pub last_eval_ns: u64,
    /// Most recent evaluation samples, oldest first.
    pub eval_history: VecDeque<EvalSample>,
}

/// An isolated statement store with its own tag rules and models.
#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub store: StatementStore,
    pub models: Vec<Model>,
    pub tag_rules: Vec<TagRule>,
    pub metrics: NodeMetrics,
    /// Statements at or before this instant are not imported again after a reset.
    pub watermark: Option<Timestamp>,
}

#[derive(Debug, Clone)]
pub struct NodeEvaluation {
    pub satisfied: Vec<bool>,
    pub derived: Vec<Statement>,
    pub sample: EvalSample,
}

impl Node {
    pub fn new(id: impl Into<String>, policy: StorePolicy) -> Self {
        let mut node = Node {
            id: id.into(),
            store: StatementStore::new(policy),
            models: Vec::new(),
            tag_rules: Vec::new(),
            metrics: NodeMetrics::default(),
            watermark: None,
        };
        node.refresh();
        node
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.models.push(model);
        self.refresh();
        self
    }

    pub fn with_tag_rule(mut self, rule: TagRule) -> Self {
        self.tag_rules.push(rule);
        self.refresh();
        self
    }

    pub fn into_cell(self) -> NodeCell {
        Arc::new(RwLock::new(self))
    }

    /// Statements, plus tag assertions, plus tag rules, plus model steps.
    pub fn complexity(&self) -> usize {
        self.store.len() + self.store.tag_count() + self.baseline_complexity()
    }

    /// Complexity of the node with an empty store.
    pub fn baseline_complexity(&self) -> usize {
        self.tag_rules.len() + self.models.iter().map(Model::step_count).sum::<usize>()
    }

    pub fn refresh(&mut self) {
        self.metrics.complexity = self.complexity();
    }

    /// Inserts and classifies without running the models.
    pub fn insert(&mut self, st: Statement) {
        self.store.insert(st);
        self.store.classify(&self.tag_rules);
        self.refresh();
    }

    /// Runs every model to a fixpoint, then the tag rules.
    pub fn evaluate(&mut self, clock: Timestamp, propagated: usize) -> Result<NodeEvaluation, EvalError> {
        let started = Instant::now();
        let mut satisfied = Vec::with_capacity(self.models.len());
        let mut derived = Vec::new();
        for model in &self.models {
            let ev = evaluate_model(model, &mut self.store, clock)?;
            satisfied.push(ev.satisfied);
            derived.extend(ev.derived);
        }
        self.store.classify(&self.tag_rules);
        let ns = started.elapsed().as_nanos() as u64;
        self.refresh();
        let sample = self.record(clock, ns, propagated);
        Ok(NodeEvaluation { satisfied, derived, sample })
    }

    /// Stores a sample of the current complexity and returns it.
    pub fn record(&mut self, at: Timestamp, eval_duration_ns: u64, propagated: usize) -> EvalSample {
        let sample = EvalSample {
            node: self.id.clone(),
            at,
            eval_duration_ns,
            complexity: self.metrics.complexity,
            propagated,
        };
        self.metrics.last_eval_ns = eval_duration_ns;
        if self.metrics.eval_history.len() == HISTORY_CAP {
            self.metrics.eval_history.pop_front();
        }
        self.metrics.eval_history.push_back(sample.clone());
        sample
    }

    /// Removes every statement, restoring the initial complexity.
    pub fn reset(&mut self, watermark: Option<Timestamp>) {
        self.store.clear();
        if watermark > self.watermark {
            self.watermark = watermark;
        }
        self.refresh();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexity_counts_statements_tags_rules_and_steps() {
        let model = crate::rules::parse_model(
            "final A\nrule a: when X:⊤ is S then A:⊤ at t(X)\n",
        )
        .unwrap();
        let mut node = Node::new("O1", StorePolicy::Append)
            .with_model(model)
            .with_tag_rule("Recognized: name=A state=⊤".parse().unwrap());
        assert_eq!(node.complexity(), 2);
        node.insert(Statement::sensor("S", true, Timestamp(5)).with_tag("Door"));
        assert_eq!(node.metrics.complexity, 4);
        let ev = node.evaluate(Timestamp(10), 1).unwrap();
        assert_eq!(ev.satisfied, vec![true]);
        // A:⊤ plus its Recognized tag
        assert_eq!(ev.sample.complexity, 6);
        node.reset(Some(Timestamp(5)));
        assert_eq!(node.metrics.complexity, node.baseline_complexity());
    }
}
