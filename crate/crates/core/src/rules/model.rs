use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::fluent::Statement;

/// How a pattern selects statements: by exact name or by context tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NameBinding {
    Name(String),
    Tag(String),
}

/// One antecedent slot of a rule: `var:state is Name` or `var:state in Tag`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub var: String,
    pub state: bool,
    pub binding: NameBinding,
}

impl Pattern {
    pub fn named(var: impl Into<String>, state: bool, name: impl Into<String>) -> Self {
        Pattern {
            var: var.into(),
            state,
            binding: NameBinding::Name(name.into()),
        }
    }

    pub fn tagged(var: impl Into<String>, state: bool, tag: impl Into<String>) -> Self {
        Pattern {
            var: var.into(),
            state,
            binding: NameBinding::Tag(tag.into()),
        }
    }

    pub fn matches(&self, st: &Statement) -> bool {
        st.state == self.state
            && match &self.binding {
                NameBinding::Name(n) => &st.name == n,
                NameBinding::Tag(t) => st.has_tag(t),
            }
    }
}

/// A duration term: a literal, or a named threshold resolved from the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Offset {
    Fixed(i64),
    Threshold { name: String, negated: bool },
}

impl Offset {
    pub fn threshold(name: impl Into<String>) -> Self {
        Offset::Threshold {
            name: name.into(),
            negated: false,
        }
    }

    pub fn resolve(&self, thresholds: &Thresholds) -> Option<i64> {
        match self {
            Offset::Fixed(ms) => Some(*ms),
            Offset::Threshold { name, negated } => thresholds
                .get(name)
                .map(|v| if *negated { -*v } else { *v }),
        }
    }

    pub(crate) fn threshold_name(&self) -> Option<&str> {
        match self {
            Offset::Threshold { name, .. } => Some(name),
            Offset::Fixed(_) => None,
        }
    }
}

pub type Thresholds = BTreeMap<String, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Less,
    Greater,
}

/// `t(lhs) + offset  rel  t(rhs)`, compared strictly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalConstraint {
    pub lhs: String,
    pub offset: Offset,
    pub relation: Relation,
    pub rhs: String,
}

impl TemporalConstraint {
    pub fn before(lhs: impl Into<String>, rhs: impl Into<String>) -> Self {
        TemporalConstraint {
            lhs: lhs.into(),
            offset: Offset::Fixed(0),
            relation: Relation::Less,
            rhs: rhs.into(),
        }
    }

    pub fn with_offset(mut self, offset: Offset) -> Self {
        self.offset = offset;
        self
    }

    pub fn greater(mut self) -> Self {
        self.relation = Relation::Greater;
        self
    }
}

/// Timestamp of a rule's consequent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeExpr {
    Of(String),
    Max(Vec<String>),
    Min(Vec<String>),
    Now,
}

impl TimeExpr {
    pub fn vars(&self) -> &[String] {
        match self {
            TimeExpr::Of(v) => std::slice::from_ref(v),
            TimeExpr::Max(vs) | TimeExpr::Min(vs) => vs,
            TimeExpr::Now => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consequent {
    pub name: String,
    pub state: bool,
    pub time: TimeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub patterns: Vec<Pattern>,
    pub constraints: Vec<TemporalConstraint>,
    pub consequent: Consequent,
}

impl Rule {
    pub fn var_index(&self, var: &str) -> Option<usize> {
        self.patterns.iter().position(|p| p.var == var)
    }
}

/// Emits `output:⊤` once the statement `source` has been ⊤ for `threshold` in total,
/// optionally counting only time after the first `after:⊤` statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DwellRule {
    pub name: String,
    pub source: String,
    pub threshold: Offset,
    pub after: Option<String>,
    pub output: String,
}

/// A chain of rules whose satisfaction is a ⊤ statement named `final_name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub rules: Vec<Rule>,
    pub dwells: Vec<DwellRule>,
    pub final_name: String,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("no rules")]
    NoRules,
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
    #[error("duplicate variable `{var}` in rule `{rule}`")]
    DuplicateVariable { rule: String, var: String },
    #[error("unbound variable `{var}` in rule `{rule}`")]
    UnboundVariable { rule: String, var: String },
    #[error("unknown threshold `{0}`")]
    UnknownThreshold(String),
    #[error("final statement `{name}` must be produced by exactly one rule (found {count})")]
    FinalNotUnique { name: String, count: usize },
    #[error("cyclic rule chain through {0:?}")]
    Cycle(Vec<String>),
}

impl Model {
    /// Number of derivation steps (rules plus dwell rules).
    pub fn step_count(&self) -> usize {
        self.rules.len() + self.dwells.len()
    }

    pub fn set_threshold(&mut self, name: &str, ms: i64) -> Result<(), ModelError> {
        match self.thresholds.get_mut(name) {
            Some(v) => {
                *v = ms;
                Ok(())
            }
            None => Err(ModelError::UnknownThreshold(name.to_string())),
        }
    }

    /// Exact statement names read by this model (pattern names and dwell sources).
    pub fn input_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .rules
            .iter()
            .flat_map(|r| r.patterns.iter())
            .filter_map(|p| match &p.binding {
                NameBinding::Name(n) => Some(n.as_str()),
                NameBinding::Tag(_) => None,
            })
            .chain(self.dwells.iter().map(|d| d.source.as_str()))
            .collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.rules.is_empty() && self.dwells.is_empty() {
            return Err(ModelError::NoRules);
        }
        let mut seen = HashMap::new();
        for name in self
            .rules
            .iter()
            .map(|r| &r.name)
            .chain(self.dwells.iter().map(|d| &d.name))
        {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(ModelError::DuplicateRule(name.clone()));
            }
        }
        for rule in &self.rules {
            validate_rule(rule, &self.thresholds)?;
        }
        for dwell in &self.dwells {
            check_threshold(&dwell.threshold, &self.thresholds)?;
        }
        let producers = self
            .rules
            .iter()
            .map(|r| &r.consequent.name)
            .chain(self.dwells.iter().map(|d| &d.output))
            .filter(|n| **n == self.final_name)
            .count();
        if producers != 1 {
            return Err(ModelError::FinalNotUnique {
                name: self.final_name.clone(),
                count: producers,
            });
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(ModelError::Cycle(cycle));
        }
        Ok(())
    }

    /// Steps as (name, output, exact inputs).
    fn steps(&self) -> Vec<(&str, &str, Vec<&str>)> {
        let rules = self.rules.iter().map(|r| {
            let inputs = r
                .patterns
                .iter()
                .filter_map(|p| match &p.binding {
                    NameBinding::Name(n) => Some(n.as_str()),
                    NameBinding::Tag(_) => None,
                })
                .collect();
            (r.name.as_str(), r.consequent.name.as_str(), inputs)
        });
        let dwells = self.dwells.iter().map(|d| {
            let mut inputs = vec![d.source.as_str()];
            if let Some(a) = &d.after {
                inputs.push(a.as_str());
            }
            (d.name.as_str(), d.output.as_str(), inputs)
        });
        rules.chain(dwells).collect()
    }

    /// A cycle in the producer→consumer graph over exact statement names, if any.
    ///
    /// Tag-bound patterns never create edges: statements derived during an
    /// evaluation carry no tags.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        let steps = self.steps();
        let edges: Vec<Vec<usize>> = steps
            .iter()
            .map(|(_, out, _)| {
                steps
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, _, ins))| ins.contains(out))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; steps.len()];
        let mut stack = Vec::new();
        fn visit(
            i: usize,
            edges: &[Vec<usize>],
            mark: &mut [u8],
            stack: &mut Vec<usize>,
        ) -> Option<Vec<usize>> {
            mark[i] = 1;
            stack.push(i);
            for &j in &edges[i] {
                if mark[j] == 1 {
                    let from = stack.iter().position(|&k| k == j).unwrap_or(0);
                    return Some(stack[from..].to_vec());
                }
                if mark[j] == 0 {
                    if let Some(c) = visit(j, edges, mark, stack) {
                        return Some(c);
                    }
                }
            }
            stack.pop();
            mark[i] = 2;
            None
        }
        (0..steps.len()).find_map(|i| {
            if mark[i] != 0 {
                return None;
            }
            visit(i, &edges, &mut mark, &mut stack)
                .map(|c| c.into_iter().map(|k| steps[k].0.to_string()).collect())
        })
    }
}

fn check_threshold(offset: &Offset, thresholds: &Thresholds) -> Result<(), ModelError> {
    match offset.threshold_name() {
        Some(name) if !thresholds.contains_key(name) => {
            Err(ModelError::UnknownThreshold(name.to_string()))
        }
        _ => Ok(()),
    }
}

fn validate_rule(rule: &Rule, thresholds: &Thresholds) -> Result<(), ModelError> {
    for (i, p) in rule.patterns.iter().enumerate() {
        if rule.patterns[..i].iter().any(|q| q.var == p.var) {
            return Err(ModelError::DuplicateVariable {
                rule: rule.name.clone(),
                var: p.var.clone(),
            });
        }
    }
    let unbound = |var: &String| ModelError::UnboundVariable {
        rule: rule.name.clone(),
        var: var.clone(),
    };
    for c in &rule.constraints {
        for v in [&c.lhs, &c.rhs] {
            if rule.var_index(v).is_none() {
                return Err(unbound(v));
            }
        }
        check_threshold(&c.offset, thresholds)?;
    }
    for v in rule.consequent.time.vars() {
        if rule.var_index(v).is_none() {
            return Err(unbound(v));
        }
    }
    Ok(())
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::dsl::write_model(self, f)
    }
}
