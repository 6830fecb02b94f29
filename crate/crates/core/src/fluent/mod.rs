//! Statements, statement stores and tag classification.
//!
//! A [`Statement`] is the unit every other part of the crate exchanges: a
//! named Boolean belief stamped with the instant it was produced. Stores hold
//! statements under one of two write policies, and [`TagRule`]s attach context
//! classes to statements.
//!
//! Stores are single-writer. Callers that share a store across threads wrap it
//! in the owning node's lock (see [`crate::network::NodeCell`]).

mod statement;
mod store;
mod tags;

pub use statement::{parse_state, state_symbol, Provenance, Statement, BOTTOM, TOP};
pub use store::{NamePattern, StatementStore, StorePolicy};
pub use tags::{NameMatch, TagRule, TagRuleError};
