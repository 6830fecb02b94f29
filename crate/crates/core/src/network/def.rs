//! TOML network definitions.
//!
//! ```toml
//! [[node]]
//! id = "O0"
//! policy = "overwrite"
//! topology = "../data/casas_topology.txt"
//!
//! [[node]]
//! id = "O4"
//! models = ["../models/a4.model"]
//! tag_rules = ["Recognized: name=A4 state=⊤"]
//! thresholds = { "δ4" = "30s" }
//!
//! [[procedure]]
//! id = "T4"
//! implementation = "importer"
//! target = "O4"
//! params = { source = "O0" }
//! events = [[{ node = "O0", tag = "NearTable2", frequency = 2 }]]
//! ```
//!
//! File references are relative to the definition file. A `builtin:` prefix
//! selects an asset compiled into the crate, e.g. `builtin:models/a4.model`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::mpsc::Receiver;

use serde::{Deserialize, Serialize};

use super::{ImplementationRegistry, Network, NetworkError, Node, ProcedureSpec};
use crate::fluent::{StorePolicy, TagRule};
use crate::metrics::MetricEvent;
use crate::rules::{parse_model, Model};
use crate::time::parse_duration;

#[derive(Debug, thiserror::Error)]
pub enum DefError {
    #[error("network definition: {0}")]
    Toml(String),
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown builtin asset `{0}`")]
    UnknownBuiltin(String),
    #[error("model {path}: {error}")]
    Model { path: String, error: crate::rules::ParseError },
    #[error("node {node}: {message}")]
    Node { node: String, message: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn default_policy() -> StorePolicy {
    StorePolicy::Append
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDef {
    pub id: String,
    #[serde(default = "default_policy")]
    pub policy: StorePolicy,
    #[serde(default)]
    pub tag_rules: Vec<String>,
    #[serde(default)]
    pub models: Vec<String>,
    /// Overrides for model thresholds, as duration strings.
    #[serde(default)]
    pub thresholds: BTreeMap<String, String>,
    /// Topology file; its presence makes this a placing node.
    #[serde(default)]
    pub topology: Option<String>,
    #[serde(default)]
    pub complexity_bound: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkFile {
    #[serde(default, rename = "node")]
    nodes: Vec<NodeDef>,
    #[serde(default, rename = "procedure")]
    procedures: Vec<ProcedureSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDef {
    pub nodes: Vec<NodeDef>,
    pub procedures: Vec<ProcedureSpec>,
    pub base_dir: Option<PathBuf>,
}

impl NetworkDef {
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<NetworkDef, DefError> {
        let file: NetworkFile = toml::from_str(text).map_err(|e| DefError::Toml(e.to_string()))?;
        Ok(NetworkDef {
            nodes: file.nodes,
            procedures: file.procedures,
            base_dir: base_dir.map(Path::to_path_buf),
        })
    }

    pub fn load(path: &Path) -> Result<NetworkDef, DefError> {
        let text = std::fs::read_to_string(path).map_err(|e| DefError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        NetworkDef::parse(&text, path.parent())
    }

    pub fn to_toml(&self) -> String {
        let file = NetworkFile {
            nodes: self.nodes.clone(),
            procedures: self.procedures.clone(),
        };
        toml::to_string(&file).expect("network definitions always serialize")
    }

    pub fn node_def(&self, id: &str) -> Option<&NodeDef> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_def_mut(&mut self, id: &str) -> Option<&mut NodeDef> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    /// Placing nodes, i.e. those that declare a topology.
    pub fn placing_nodes(&self) -> impl Iterator<Item = &NodeDef> {
        self.nodes.iter().filter(|n| n.topology.is_some())
    }

    /// Sets every condition of every procedure to `hz` polls per second.
    pub fn set_frequency(&mut self, hz: u32) {
        for cond in self.procedures.iter_mut().flat_map(|p| p.events.iter_mut().flatten()) {
            cond.frequency = hz;
        }
    }

    /// Reads a referenced file or builtin asset.
    pub fn read_source(&self, reference: &str) -> Result<String, DefError> {
        if let Some(name) = reference.strip_prefix("builtin:") {
            return crate::adl::builtin_asset(name)
                .map(str::to_string)
                .ok_or_else(|| DefError::UnknownBuiltin(name.to_string()));
        }
        let path = match &self.base_dir {
            Some(dir) => dir.join(reference),
            None => PathBuf::from(reference),
        };
        std::fs::read_to_string(&path).map_err(|e| DefError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn models(&self, def: &NodeDef) -> Result<Vec<Model>, DefError> {
        let node_err = |message: String| DefError::Node { node: def.id.clone(), message };
        let mut models = Vec::new();
        for reference in &def.models {
            let text = self.read_source(reference)?;
            let model = parse_model(&text).map_err(|error| DefError::Model {
                path: reference.clone(),
                error,
            })?;
            models.push(model);
        }
        for (name, value) in &def.thresholds {
            let ms = parse_duration(value).map_err(|e| node_err(e.to_string()))?;
            let mut found = false;
            for m in &mut models {
                found |= m.set_threshold(name, ms).is_ok();
            }
            if !found {
                return Err(node_err(format!("no model declares threshold `{name}`")));
            }
        }
        Ok(models)
    }

    pub fn build_node(&self, def: &NodeDef) -> Result<Node, DefError> {
        let mut node = Node::new(def.id.clone(), def.policy);
        for text in &def.tag_rules {
            let rule: TagRule = text.parse().map_err(|e: crate::fluent::TagRuleError| {
                DefError::Node { node: def.id.clone(), message: e.to_string() }
            })?;
            node = node.with_tag_rule(rule);
        }
        for model in self.models(def)? {
            node = node.with_model(model);
        }
        Ok(node)
    }

    /// Registers every node and procedure. Placing topologies are not loaded here.
    pub fn build(
        &self,
        registry: ImplementationRegistry,
    ) -> Result<(Network, Receiver<MetricEvent>), DefError> {
        let (mut net, rx) = Network::new(registry);
        for def in &self.nodes {
            net.register_node(self.build_node(def)?)?;
        }
        for spec in &self.procedures {
            net.register_procedure(spec.clone())?;
        }
        Ok((net, rx))
    }
}
