//! Fluent statements, temporal rule models and a network of reasoning nodes
//! for recognizing activities of daily living from smart-home sensor logs.

pub mod adl;
pub mod casas;
pub mod fluent;
pub mod harness;
pub mod metrics;
pub mod network;
pub mod placing;
pub mod rules;
pub mod time;
