use std::fmt;

use serde::{Deserialize, Serialize};

use super::statement::Statement;
use super::tags::TagRule;
use crate::time::Timestamp;

/// Write policy of a [`StatementStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorePolicy {
    /// Memory-free: a new statement replaces any statement with the same name.
    Overwrite,
    /// History-keeping: statements accumulate in time order.
    Append,
}

/// Name selector used by [`StatementStore::query`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NamePattern {
    Any,
    Exact(String),
}

impl NamePattern {
    pub fn matches(&self, name: &str) -> bool {
        match self {
            NamePattern::Any => true,
            NamePattern::Exact(n) => n == name,
        }
    }
}

impl From<&str> for NamePattern {
    fn from(s: &str) -> Self {
        if s == "*" {
            NamePattern::Any
        } else {
            NamePattern::Exact(s.to_string())
        }
    }
}

/// A multiset of statements kept in non-decreasing time order.
///
/// Statements with equal times stay in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct StatementStore {
    policy: StorePolicy,
    statements: Vec<Statement>,
}

impl StatementStore {
    pub fn new(policy: StorePolicy) -> Self {
        StatementStore {
            policy,
            statements: Vec::new(),
        }
    }

    pub fn overwrite() -> Self {
        Self::new(StorePolicy::Overwrite)
    }

    pub fn append() -> Self {
        Self::new(StorePolicy::Append)
    }

    pub fn policy(&self) -> StorePolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Statement> {
        self.statements.iter()
    }

    /// Inserts under the store's policy. Returns the statement it replaced, if any.
    pub fn insert(&mut self, st: Statement) -> Option<Statement> {
        let replaced = match self.policy {
            StorePolicy::Overwrite => self
                .statements
                .iter()
                .position(|s| s.name == st.name)
                .map(|idx| self.statements.remove(idx)),
            StorePolicy::Append => None,
        };
        let at = self.statements.partition_point(|s| s.time <= st.time);
        self.statements.insert(at, st);
        replaced
    }

    /// All statements matching the name pattern and, when given, carrying `tag`.
    /// Results are in time order.
    pub fn query(&self, name: &NamePattern, tag: Option<&str>) -> Vec<&Statement> {
        self.statements
            .iter()
            .filter(|s| name.matches(&s.name) && tag.is_none_or(|t| s.has_tag(t)))
            .collect()
    }

    /// Existence check used by activation conditions: never exposes state or time.
    pub fn exists(&self, name: Option<&str>, tag: Option<&str>) -> bool {
        self.statements.iter().any(|s| {
            name.is_none_or(|n| s.name == n) && tag.is_none_or(|t| s.has_tag(t))
        })
    }

    /// Whether a statement with this exact `(name, state, time)` is stored.
    pub fn contains_fact(&self, name: &str, state: bool, time: Timestamp) -> bool {
        self.statements
            .iter()
            .any(|s| s.time == time && s.state == state && s.name == name)
    }

    /// Latest statement with the given name.
    pub fn latest(&self, name: &str) -> Option<&Statement> {
        self.statements.iter().rev().find(|s| s.name == name)
    }

    pub fn remove_named(&mut self, name: &str) -> usize {
        let before = self.statements.len();
        self.statements.retain(|s| s.name != name);
        before - self.statements.len()
    }

    pub fn clear(&mut self) {
        self.statements.clear();
    }

    /// Number of tag assertions across all statements.
    pub fn tag_count(&self) -> usize {
        self.statements.iter().map(|s| s.tags.len()).sum()
    }

    /// Applies tag rules until no statement gains a new tag. Returns the number of
    /// tags added. Never removes a tag.
    pub fn classify(&mut self, rules: &[TagRule]) -> usize {
        let mut added = 0;
        loop {
            let mut changed = false;
            for st in &mut self.statements {
                for rule in rules {
                    if !st.has_tag(&rule.tag) && rule.matches(st) {
                        st.tags.insert(rule.tag.clone());
                        added += 1;
                        changed = true;
                    }
                }
            }
            if !changed {
                return added;
            }
        }
    }

    /// Line-oriented debug dump, one statement per line.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for StatementStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for st in &self.statements {
            writeln!(f, "{st}")?;
        }
        Ok(())
    }
}
