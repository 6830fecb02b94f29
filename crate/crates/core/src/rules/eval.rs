//! Closed-world evaluation of rules and models over a statement store.

use std::collections::HashSet;

use super::model::{
    DwellRule, Model, Relation, Rule, TemporalConstraint, Thresholds, TimeExpr,
};
use crate::fluent::{Statement, StatementStore};
use crate::time::Timestamp;

/// An assignment of store statements to a rule's pattern variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding<'s> {
    slots: Vec<(String, &'s Statement)>,
}

impl<'s> Binding<'s> {
    pub fn new() -> Self {
        Binding { slots: Vec::new() }
    }

    pub fn with(mut self, var: impl Into<String>, st: &'s Statement) -> Self {
        self.slots.push((var.into(), st));
        self
    }

    pub fn get(&self, var: &str) -> Option<&'s Statement> {
        self.slots.iter().find(|(v, _)| v == var).map(|(_, s)| *s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &'s Statement)> + '_ {
        self.slots.iter().map(|(v, s)| (v.as_str(), *s))
    }
}

impl Default for Binding<'_> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown threshold `{0}`")]
    UnknownThreshold(String),
}

/// Candidate statements for each pattern, in (time, name) order.
fn candidates<'s>(rule: &Rule, store: &'s StatementStore) -> Vec<Vec<&'s Statement>> {
    rule.patterns
        .iter()
        .map(|p| {
            let mut c: Vec<&Statement> = store.iter().filter(|s| p.matches(s)).collect();
            c.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.name.cmp(&b.name)));
            c
        })
        .collect()
}

/// Every assignment of store statements to the rule's patterns.
///
/// Ordering is lexicographic over pattern order, each pattern's candidates
/// sorted by statement time then name.
pub fn bind<'s>(rule: &Rule, store: &'s StatementStore) -> Vec<Binding<'s>> {
    let cands = candidates(rule, store);
    if cands.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; cands.len()];
    loop {
        let binding = Binding {
            slots: rule
                .patterns
                .iter()
                .zip(&idx)
                .zip(&cands)
                .map(|((p, &i), c)| (p.var.clone(), c[i]))
                .collect(),
        };
        out.push(binding);
        // odometer increment, last pattern fastest
        let mut k = cands.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < cands[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn holds(constraint: &TemporalConstraint, lhs: Timestamp, rhs: Timestamp, offset: i64) -> bool {
    let left = lhs.shifted(offset);
    let right = rhs.0 as i128;
    match constraint.relation {
        Relation::Less => left < right,
        Relation::Greater => left > right,
    }
}

/// True iff every `t(lhs)+offset rel t(rhs)` holds, with strict comparison.
pub fn check_constraints(
    binding: &Binding<'_>,
    constraints: &[TemporalConstraint],
    thresholds: &Thresholds,
) -> Result<bool, EvalError> {
    for c in constraints {
        let lhs = binding
            .get(&c.lhs)
            .ok_or_else(|| EvalError::UnboundVariable(c.lhs.clone()))?;
        let rhs = binding
            .get(&c.rhs)
            .ok_or_else(|| EvalError::UnboundVariable(c.rhs.clone()))?;
        let offset = resolve(&c.offset, thresholds)?;
        if !holds(c, lhs.time, rhs.time, offset) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn resolve(offset: &super::Offset, thresholds: &Thresholds) -> Result<i64, EvalError> {
    offset.resolve(thresholds).ok_or_else(|| {
        EvalError::UnknownThreshold(offset.threshold_name().unwrap_or_default().to_string())
    })
}

/// Builds the consequent statement for a binding that passed its constraints.
pub fn fire(rule: &Rule, binding: &Binding<'_>, clock: Timestamp) -> Result<Statement, EvalError> {
    let time_of = |v: &String| {
        binding
            .get(v)
            .map(|s| s.time)
            .ok_or_else(|| EvalError::UnboundVariable(v.clone()))
    };
    let time = match &rule.consequent.time {
        TimeExpr::Of(v) => time_of(v)?,
        TimeExpr::Max(vs) => vs
            .iter()
            .map(time_of)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(clock),
        TimeExpr::Min(vs) => vs
            .iter()
            .map(time_of)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .min()
            .unwrap_or(clock),
        TimeExpr::Now => clock,
    };
    Ok(Statement::derived(
        rule.consequent.name.clone(),
        rule.consequent.state,
        time,
    ))
}

/// Consequents of every binding that satisfies the rule's constraints.
///
/// Equivalent to filtering [`bind`] through [`check_constraints`] and
/// [`fire`], but prunes partial assignments as soon as a constraint over
/// already-bound variables fails.
pub fn derive(
    rule: &Rule,
    store: &StatementStore,
    thresholds: &Thresholds,
    clock: Timestamp,
) -> Result<Vec<Statement>, EvalError> {
    let cands = candidates(rule, store);
    if cands.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }
    // constraints become checkable once the later of their two variables is bound
    let mut checks: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); rule.patterns.len()];
    let mut offsets = Vec::with_capacity(rule.constraints.len());
    for (ci, c) in rule.constraints.iter().enumerate() {
        let l = rule
            .var_index(&c.lhs)
            .ok_or_else(|| EvalError::UnboundVariable(c.lhs.clone()))?;
        let r = rule
            .var_index(&c.rhs)
            .ok_or_else(|| EvalError::UnboundVariable(c.rhs.clone()))?;
        checks[l.max(r)].push((ci, l, r));
        offsets.push(resolve(&c.offset, thresholds)?);
    }

    let mut out = Vec::new();
    let mut chosen: Vec<&Statement> = Vec::with_capacity(cands.len());
    #[allow(clippy::too_many_arguments)]
    fn walk<'s>(
        depth: usize,
        rule: &Rule,
        cands: &[Vec<&'s Statement>],
        checks: &[Vec<(usize, usize, usize)>],
        offsets: &[i64],
        chosen: &mut Vec<&'s Statement>,
        clock: Timestamp,
        out: &mut Vec<Statement>,
    ) -> Result<(), EvalError> {
        if depth == cands.len() {
            let binding = Binding {
                slots: rule
                    .patterns
                    .iter()
                    .zip(chosen.iter())
                    .map(|(p, s)| (p.var.clone(), *s))
                    .collect(),
            };
            out.push(fire(rule, &binding, clock)?);
            return Ok(());
        }
        for &st in &cands[depth] {
            chosen.push(st);
            let ok = checks[depth].iter().all(|&(ci, l, r)| {
                holds(&rule.constraints[ci], chosen[l].time, chosen[r].time, offsets[ci])
            });
            if ok {
                walk(depth + 1, rule, cands, checks, offsets, chosen, clock, out)?;
            }
            chosen.pop();
        }
        Ok(())
    }
    walk(0, rule, &cands, &checks, &offsets, &mut chosen, clock, &mut out)?;
    Ok(out)
}

/// Sweep over the ⊤/⊥ history of `name`, returning when the accumulated ⊤
/// time first reaches `threshold`. Intervals close at the next ⊥ or at `clock`;
/// time before `since` is not counted.
pub fn dwell_crossing(
    store: &StatementStore,
    name: &str,
    threshold: i64,
    clock: Timestamp,
    since: Option<Timestamp>,
) -> Option<Timestamp> {
    let floor = since.unwrap_or(Timestamp::ZERO);
    let need = threshold.max(0) as u64;
    let mut total: u64 = 0;
    let mut open: Option<Timestamp> = None;
    let close = |start: Timestamp, end: Timestamp, total: &mut u64| -> Option<Timestamp> {
        let start = start.max(floor);
        if end < start {
            return None;
        }
        let len = end.0 - start.0;
        if *total + len >= need {
            return Some(start + (need - *total));
        }
        *total += len;
        None
    };
    for st in store.iter().filter(|s| s.name == name) {
        match (st.state, open) {
            (true, None) => open = Some(st.time),
            (false, Some(start)) => {
                open = None;
                if let Some(at) = close(start, st.time, &mut total) {
                    return Some(at);
                }
            }
            _ => {}
        }
    }
    let start = open?;
    close(start, clock, &mut total).filter(|at| *at <= clock)
}

/// Sums the intervals where `name` was ⊤ and, once the total reaches
/// `threshold`, returns `out_name:⊤` stamped at the crossing instant.
pub fn accumulate_duration(
    store: &StatementStore,
    name: &str,
    threshold: i64,
    out_name: &str,
    clock: Timestamp,
) -> Option<Statement> {
    dwell_crossing(store, name, threshold, clock, None)
        .map(|at| Statement::derived(out_name, true, at))
}

fn apply_dwell(
    dwell: &DwellRule,
    store: &StatementStore,
    thresholds: &Thresholds,
    clock: Timestamp,
) -> Result<Option<Statement>, EvalError> {
    let threshold = resolve(&dwell.threshold, thresholds)?;
    let since = match &dwell.after {
        Some(anchor) => match store.iter().find(|s| &s.name == anchor && s.state) {
            Some(st) => Some(st.time),
            None => return Ok(None),
        },
        None => None,
    };
    Ok(dwell_crossing(store, &dwell.source, threshold, clock, since)
        .map(|at| Statement::derived(dwell.output.clone(), true, at)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub satisfied: bool,
    pub derived: Vec<Statement>,
}

/// Fires every rule of the model to a fixpoint, appending derived statements
/// to `store`. A consequent identical in `(name, state, time)` to a stored
/// statement is not added again.
pub fn evaluate_model(
    model: &Model,
    store: &mut StatementStore,
    clock: Timestamp,
) -> Result<Evaluation, EvalError> {
    let mut derived = Vec::new();
    // an acyclic chain of n steps settles in at most n productive iterations
    for _ in 0..=model.step_count() {
        let mut fresh: Vec<Statement> = Vec::new();
        let mut seen: HashSet<(String, bool, Timestamp)> = HashSet::new();
        let mut offer = |st: Statement, store: &StatementStore, fresh: &mut Vec<Statement>| {
            if !store.contains_fact(&st.name, st.state, st.time)
                && seen.insert((st.name.clone(), st.state, st.time))
            {
                fresh.push(st);
            }
        };
        for rule in &model.rules {
            for st in derive(rule, store, &model.thresholds, clock)? {
                offer(st, store, &mut fresh);
            }
        }
        for dwell in &model.dwells {
            if let Some(st) = apply_dwell(dwell, store, &model.thresholds, clock)? {
                offer(st, store, &mut fresh);
            }
        }
        if fresh.is_empty() {
            break;
        }
        for st in fresh {
            store.insert(st.clone());
            derived.push(st);
        }
    }
    let satisfied = store
        .iter()
        .any(|s| s.state && s.name == model.final_name);
    Ok(Evaluation { satisfied, derived })
}
