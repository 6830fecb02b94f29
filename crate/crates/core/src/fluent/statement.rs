use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

/// Where a statement came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Sensor,
    Derived,
    Procedure,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Sensor => "sensor",
            Provenance::Derived => "derived",
            Provenance::Procedure => "procedure",
        }
    }

    pub fn parse(text: &str) -> Option<Provenance> {
        match text {
            "sensor" => Some(Provenance::Sensor),
            "derived" => Some(Provenance::Derived),
            "procedure" => Some(Provenance::Procedure),
            _ => None,
        }
    }
}

/// Symbol used when rendering a true state.
pub const TOP: &str = "⊤";
/// Symbol used when rendering a false state.
pub const BOTTOM: &str = "⊥";

/// Parses a Boolean state token. Accepts the `⊤`/`⊥` symbols and a few ASCII spellings.
pub fn parse_state(token: &str) -> Option<bool> {
    match token {
        "⊤" | "top" | "true" | "1" => Some(true),
        "⊥" | "bot" | "bottom" | "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn state_symbol(state: bool) -> &'static str {
    if state {
        TOP
    } else {
        BOTTOM
    }
}

/// A named Boolean belief with the instant it was generated.
///
/// Every statement carries exactly one state and one time. Context classes are
/// modelled as tags; the tag set may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Statement {
    pub name: String,
    pub state: bool,
    pub time: Timestamp,
    pub tags: BTreeSet<String>,
    pub provenance: Provenance,
}

impl Statement {
    pub fn new(
        name: impl Into<String>,
        state: bool,
        time: Timestamp,
        provenance: Provenance,
    ) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "statement name must be non-empty");
        Statement {
            name,
            state,
            time,
            tags: BTreeSet::new(),
            provenance,
        }
    }

    pub fn sensor(name: impl Into<String>, state: bool, time: Timestamp) -> Self {
        Statement::new(name, state, time, Provenance::Sensor)
    }

    pub fn derived(name: impl Into<String>, state: bool, time: Timestamp) -> Self {
        Statement::new(name, state, time, Provenance::Derived)
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.insert(tag.into());
        self
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags.extend(tags.into_iter().map(Into::into));
        self
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    /// The `(name, state, time)` triple that identifies a fact regardless of tags.
    pub fn fact(&self) -> (&str, bool, Timestamp) {
        (&self.name, self.state, self.time)
    }

    pub fn same_fact(&self, other: &Statement) -> bool {
        self.fact() == other.fact()
    }
}

/// Debug-dump form: `name state time tags...`.
impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.name, state_symbol(self.state), self.time)?;
        for tag in &self.tags {
            write!(f, " {tag}")?;
        }
        Ok(())
    }
}
