//! Spatial contextualization: raw sensor statements become person-location
//! beliefs on a placing node kept under the overwrite policy.
//!
//! Any sensor event other than motion turning off localizes the person. The
//! beliefs it implies replace the current set: places no longer near go ⊥,
//! and a room change turns the previous `In<room>` belief ⊥. ⊤ beliefs are
//! tagged with their own name plus `Location`; ⊥ beliefs only with
//! `Location`, so tag conditions see the person only where they are.

mod topology;

use std::collections::BTreeSet;

pub use topology::{in_name, near_name, Placement, SensorKind, Topology, TopologyError};

use crate::fluent::{Provenance, Statement};
use crate::network::Node;

pub const TAG_SENSOR: &str = "Sensor";
pub const TAG_LOCATION: &str = "Location";
/// Default configured complexity bound for the placing node.
pub const DEFAULT_COMPLEXITY_BOUND: usize = 400;

/// True for events that say where the person is.
pub fn localizes(kind: SensorKind, state: bool) -> bool {
    state || kind != SensorKind::Motion
}

fn belief(name: String, state: bool, time: crate::time::Timestamp) -> Statement {
    let st = Statement::new(name.clone(), state, time, Provenance::Derived).with_tag(TAG_LOCATION);
    if state {
        st.with_tag(name)
    } else {
        st
    }
}

fn raw(kind: SensorKind, st: &Statement) -> Statement {
    st.clone().with_tag(kind.tag()).with_tag(TAG_SENSOR)
}

/// The raw statement tagged with its kind plus every location belief its
/// sensor implies, all at the sensor time. Unknown sensors yield nothing.
pub fn contextualize(topology: &Topology, st: &Statement) -> Vec<Statement> {
    let Some(kind) = topology.kind(&st.name) else {
        log::warn!("unknown sensor `{}` dropped", st.name);
        return Vec::new();
    };
    let mut out = vec![raw(kind, st)];
    if localizes(kind, st.state) {
        let p = topology.placement(&st.name);
        out.extend(p.near.iter().map(|f| belief(near_name(f), true, st.time)));
        out.extend(p.room.iter().map(|r| belief(in_name(r), true, st.time)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestReport {
    pub accepted: usize,
    pub dropped: usize,
    /// Statements written to the node, beliefs included.
    pub written: usize,
}

/// Tracks the current location beliefs for one placing node.
#[derive(Debug, Clone)]
pub struct Placer {
    topology: Topology,
    near: BTreeSet<String>,
    room: Option<String>,
}

impl Placer {
    pub fn new(topology: Topology) -> Self {
        Placer { topology, near: BTreeSet::new(), room: None }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Forget the current location without touching any node.
    pub fn clear(&mut self) {
        self.near.clear();
        self.room = None;
    }

    /// Statements to write for one sensor event, beliefs emitted on change only.
    pub fn place(&mut self, st: &Statement) -> Option<Vec<Statement>> {
        let Some(kind) = self.topology.kind(&st.name) else {
            log::warn!("unknown sensor `{}` dropped", st.name);
            return None;
        };
        let mut out = vec![raw(kind, st)];
        if !localizes(kind, st.state) {
            return Some(out);
        }
        let t = st.time;
        let p = self.topology.placement(&st.name);
        for gone in self.near.difference(&p.near) {
            out.push(belief(near_name(gone), false, t));
        }
        for new in p.near.difference(&self.near) {
            out.push(belief(near_name(new), true, t));
        }
        if p.room.is_some() && p.room != self.room {
            if let Some(old) = &self.room {
                out.push(belief(in_name(old), false, t));
            }
            out.push(belief(in_name(p.room.as_deref().unwrap_or_default()), true, t));
            self.room = p.room;
        }
        self.near = p.near;
        Some(out)
    }

    /// Writes a batch into the node (overwrite policy expected), then
    /// classifies and refreshes its complexity. No temporal reasoning happens here.
    pub fn ingest<I>(&mut self, node: &mut Node, batch: I) -> IngestReport
    where
        I: IntoIterator<Item = Statement>,
    {
        let mut report = IngestReport::default();
        for st in batch {
            match self.place(&st) {
                Some(out) => {
                    report.accepted += 1;
                    report.written += out.len();
                    for s in out {
                        node.store.insert(s);
                    }
                }
                None => report.dropped += 1,
            }
        }
        if report.written > 0 {
            node.store.classify(&node.tag_rules);
            node.refresh();
        }
        report
    }
}
