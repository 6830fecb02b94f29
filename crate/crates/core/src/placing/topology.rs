use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorKind {
    #[serde(rename = "M")]
    Motion,
    #[serde(rename = "I")]
    Item,
    #[serde(rename = "P")]
    Phone,
    #[serde(rename = "D")]
    Door,
    #[serde(rename = "F")]
    Flow,
}

impl SensorKind {
    pub const ALL: [SensorKind; 5] = [
        SensorKind::Motion,
        SensorKind::Item,
        SensorKind::Phone,
        SensorKind::Door,
        SensorKind::Flow,
    ];

    pub fn letter(self) -> char {
        match self {
            SensorKind::Motion => 'M',
            SensorKind::Item => 'I',
            SensorKind::Phone => 'P',
            SensorKind::Door => 'D',
            SensorKind::Flow => 'F',
        }
    }

    pub fn from_letter(c: char) -> Option<SensorKind> {
        SensorKind::ALL.into_iter().find(|k| k.letter() == c)
    }

    /// Tag attached to raw statements of this kind.
    pub fn tag(self) -> &'static str {
        match self {
            SensorKind::Motion => "Motion",
            SensorKind::Item => "ItemPresence",
            SensorKind::Phone => "Phone",
            SensorKind::Door => "Door",
            SensorKind::Flow => "Flow",
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared symbol `{symbol}`")]
    Undeclared { line: usize, symbol: String },
    #[error("line {line}: `{symbol}` declared twice")]
    Duplicate { line: usize, symbol: String },
    #[error("sensor `{0}` has no placement")]
    Unplaced(String),
    #[error("sensor `{sensor}` resolves to several rooms: {rooms:?}")]
    AmbiguousRoom { sensor: String, rooms: Vec<String> },
    #[error("no sensors")]
    NoSensors,
}

/// Rooms, furniture and sensors linked by `isNearTo` and `isLocatedIn`.
///
/// ```text
/// room kitchen
/// furniture cabinet2
/// sensor D7 D
/// isNearTo(D7, cabinet2)
/// isLocatedIn(cabinet2, kitchen)
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    pub rooms: BTreeSet<String>,
    pub furniture: BTreeSet<String>,
    pub sensors: BTreeMap<String, SensorKind>,
    /// sensor → furniture or rooms it is near
    pub near: BTreeMap<String, BTreeSet<String>>,
    /// furniture or sensor → room
    pub located_in: BTreeMap<String, String>,
}

/// Where a sensor event puts the person.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Placement {
    pub near: BTreeSet<String>,
    pub room: Option<String>,
}

fn capitalized(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Belief name and tag for being near a piece of furniture.
pub fn near_name(place: &str) -> String {
    format!("Near{}", capitalized(place))
}

/// Belief name and tag for being in a room.
pub fn in_name(room: &str) -> String {
    format!("In{}", capitalized(room))
}

fn symbol_ok(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

impl Topology {
    pub fn kind(&self, sensor: &str) -> Option<SensorKind> {
        self.sensors.get(sensor).copied()
    }

    /// Furniture the sensor is near and the single room it resolves to.
    pub fn placement(&self, sensor: &str) -> Placement {
        let mut p = Placement::default();
        let mut rooms = BTreeSet::new();
        for target in self.near.get(sensor).into_iter().flatten() {
            if self.rooms.contains(target) {
                rooms.insert(target.clone());
            } else {
                p.near.insert(target.clone());
                if let Some(r) = self.located_in.get(target) {
                    rooms.insert(r.clone());
                }
            }
        }
        if let Some(r) = self.located_in.get(sensor) {
            rooms.insert(r.clone());
        }
        p.room = rooms.into_iter().next();
        p
    }

    fn rooms_of(&self, sensor: &str) -> BTreeSet<String> {
        let mut rooms: BTreeSet<String> = self.located_in.get(sensor).cloned().into_iter().collect();
        for target in self.near.get(sensor).into_iter().flatten() {
            if self.rooms.contains(target) {
                rooms.insert(target.clone());
            } else if let Some(r) = self.located_in.get(target) {
                rooms.insert(r.clone());
            }
        }
        rooms
    }

    /// Every distinct location belief name the topology can produce.
    pub fn location_names(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        for sensor in self.sensors.keys() {
            let p = self.placement(sensor);
            names.extend(p.near.iter().map(|f| near_name(f)));
            names.extend(p.room.iter().map(|r| in_name(r)));
        }
        names
    }

    /// Upper bound on the complexity of a placing node over this topology
    /// carrying `tag_rules` tag rules and no models.
    ///
    /// Each of the `N` distinct names holds one statement with at most two
    /// own tags, and each tag rule can add one more tag per statement.
    pub fn complexity_bound(&self, tag_rules: usize) -> usize {
        let n = self.sensors.len() + self.location_names().len();
        n * (3 + tag_rules) + tag_rules
    }

    fn validate(&self) -> Result<(), TopologyError> {
        if self.sensors.is_empty() {
            return Err(TopologyError::NoSensors);
        }
        for sensor in self.sensors.keys() {
            if !self.near.contains_key(sensor) && !self.located_in.contains_key(sensor) {
                return Err(TopologyError::Unplaced(sensor.clone()));
            }
            let rooms = self.rooms_of(sensor);
            if rooms.len() > 1 {
                return Err(TopologyError::AmbiguousRoom {
                    sensor: sensor.clone(),
                    rooms: rooms.into_iter().collect(),
                });
            }
        }
        Ok(())
    }
}

impl FromStr for Topology {
    type Err = TopologyError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut topo = Topology::default();
        let mut relations = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let syntax = |message: &str| TopologyError::Syntax { line, message: message.to_string() };
            if let Some((head, rest)) = body.split_once('(') {
                let args = rest.strip_suffix(')').ok_or_else(|| syntax("missing `)`"))?;
                let (a, b) = args.split_once(',').ok_or_else(|| syntax("relations take two arguments"))?;
                let (a, b) = (a.trim().to_string(), b.trim().to_string());
                if !symbol_ok(&a) || !symbol_ok(&b) {
                    return Err(syntax("bad relation argument"));
                }
                match head.trim() {
                    "isNearTo" => relations.push((line, true, a, b)),
                    "isLocatedIn" => relations.push((line, false, a, b)),
                    other => return Err(syntax(&format!("unknown relation `{other}`"))),
                }
                continue;
            }
            let words: Vec<&str> = body.split_whitespace().collect();
            let declared = |t: &Topology, s: &str| {
                t.rooms.contains(s) || t.furniture.contains(s) || t.sensors.contains_key(s)
            };
            let dup = |s: &str| TopologyError::Duplicate { line, symbol: s.to_string() };
            match words.as_slice() {
                ["room", name] if symbol_ok(name) => {
                    if declared(&topo, name) {
                        return Err(dup(name));
                    }
                    topo.rooms.insert(name.to_string());
                }
                ["furniture", name] if symbol_ok(name) => {
                    if declared(&topo, name) {
                        return Err(dup(name));
                    }
                    topo.furniture.insert(name.to_string());
                }
                ["sensor", name, kind] if symbol_ok(name) => {
                    let mut letters = kind.chars();
                    let kind = match (letters.next(), letters.next()) {
                        (Some(c), None) => SensorKind::from_letter(c),
                        _ => None,
                    }
                    .ok_or_else(|| syntax("sensor kind must be one of M I P D F"))?;
                    if declared(&topo, name) {
                        return Err(dup(name));
                    }
                    topo.sensors.insert(name.to_string(), kind);
                }
                _ => return Err(syntax("expected `room`, `furniture`, `sensor` or a relation")),
            }
        }
        for (line, near, a, b) in relations {
            let undeclared = |s: &str| TopologyError::Undeclared { line, symbol: s.to_string() };
            if near {
                if !topo.sensors.contains_key(&a) {
                    return Err(undeclared(&a));
                }
                if !topo.furniture.contains(&b) && !topo.rooms.contains(&b) {
                    return Err(undeclared(&b));
                }
                topo.near.entry(a).or_default().insert(b);
            } else {
                if !topo.furniture.contains(&a) && !topo.sensors.contains_key(&a) {
                    return Err(undeclared(&a));
                }
                if !topo.rooms.contains(&b) {
                    return Err(undeclared(&b));
                }
                if let Some(prev) = topo.located_in.insert(a.clone(), b.clone()) {
                    if prev != b {
                        return Err(TopologyError::Syntax {
                            line,
                            message: format!("`{a}` located in both `{prev}` and `{b}`"),
                        });
                    }
                }
            }
        }
        topo.validate()?;
        Ok(topo)
    }
}
