use std::fmt;
use std::str::FromStr;

use super::statement::{parse_state, state_symbol, Provenance, Statement};

/// How a [`TagRule`] selects statement names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum NameMatch {
    #[default]
    Any,
    Exact(String),
    Prefix(String),
}

impl NameMatch {
    fn matches(&self, name: &str) -> bool {
        match self {
            NameMatch::Any => true,
            NameMatch::Exact(n) => n == name,
            NameMatch::Prefix(p) => name.starts_with(p.as_str()),
        }
    }
}

/// A single-statement predicate that, when satisfied, adds `tag`.
///
/// Text form: `Tag: name=A1 state=⊤ has=Other provenance=derived`, every
/// field after the colon optional. `name=I*` matches by prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagRule {
    pub tag: String,
    pub name: NameMatch,
    pub state: Option<bool>,
    pub has: Option<String>,
    pub provenance: Option<Provenance>,
}

impl TagRule {
    pub fn new(tag: impl Into<String>) -> Self {
        TagRule {
            tag: tag.into(),
            name: NameMatch::Any,
            state: None,
            has: None,
            provenance: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = NameMatch::Exact(name.into());
        self
    }

    pub fn with_state(mut self, state: bool) -> Self {
        self.state = Some(state);
        self
    }

    pub fn matches(&self, st: &Statement) -> bool {
        self.name.matches(&st.name)
            && self.state.is_none_or(|s| s == st.state)
            && self.has.as_deref().is_none_or(|t| st.has_tag(t))
            && self.provenance.is_none_or(|p| p == st.provenance)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid tag rule `{text}`: {reason}")]
pub struct TagRuleError {
    pub text: String,
    pub reason: String,
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

impl FromStr for TagRule {
    type Err = TagRuleError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| TagRuleError {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (tag, rest) = text.split_once(':').ok_or_else(|| fail("missing `:`"))?;
        let tag = tag.trim();
        if !valid_symbol(tag) {
            return Err(fail("tag must be a non-empty symbol"));
        }
        let mut rule = TagRule::new(tag);
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| fail("fields are `key=value`"))?;
            match key {
                "name" => {
                    rule.name = match value.strip_suffix('*') {
                        Some("") => NameMatch::Any,
                        Some(prefix) if valid_symbol(prefix) => NameMatch::Prefix(prefix.into()),
                        None if valid_symbol(value) => NameMatch::Exact(value.into()),
                        _ => return Err(fail("bad name")),
                    }
                }
                "state" => {
                    rule.state = Some(parse_state(value).ok_or_else(|| fail("bad state"))?)
                }
                "has" if valid_symbol(value) => rule.has = Some(value.to_string()),
                "provenance" => {
                    rule.provenance =
                        Some(Provenance::parse(value).ok_or_else(|| fail("bad provenance"))?)
                }
                _ => return Err(fail("unknown field")),
            }
        }
        Ok(rule)
    }
}

impl fmt::Display for TagRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.tag)?;
        match &self.name {
            NameMatch::Any => {}
            NameMatch::Exact(n) => write!(f, " name={n}")?,
            NameMatch::Prefix(p) => write!(f, " name={p}*")?,
        }
        if let Some(s) = self.state {
            write!(f, " state={}", state_symbol(s))?;
        }
        if let Some(h) = &self.has {
            write!(f, " has={h}")?;
        }
        if let Some(p) = self.provenance {
            write!(f, " provenance={}", p.as_str())?;
        }
        Ok(())
    }
}
