//! The eight activity packages of the CASAS apartment: one model node per
//! activity, an importer feeding it from the placing node and a detector
//! reporting and resetting it.

mod procedures;

pub use procedures::{registry, Detector, Importer, TAG_RECOGNIZED};

use crate::network::{ConditionSpec, NetworkDef, NodeDef, ProcedureSpec};
use crate::fluent::StorePolicy;
use crate::rules::{parse_model, Model};

pub const PLACING_NODE: &str = "O0";
pub const ACTIVITY_COUNT: u8 = 8;

const ASSETS: &[(&str, &str)] = &[
    ("models/a1.model", include_str!("../../../../models/a1.model")),
    ("models/a2.model", include_str!("../../../../models/a2.model")),
    ("models/a3.model", include_str!("../../../../models/a3.model")),
    ("models/a4.model", include_str!("../../../../models/a4.model")),
    ("models/a5.model", include_str!("../../../../models/a5.model")),
    ("models/a6.model", include_str!("../../../../models/a6.model")),
    ("models/a7.model", include_str!("../../../../models/a7.model")),
    ("models/a8.model", include_str!("../../../../models/a8.model")),
    ("data/casas_topology.txt", include_str!("../../../../data/casas_topology.txt")),
    ("data/casas_mapping.toml", include_str!("../../../../data/casas_mapping.toml")),
];

/// Assets compiled into the crate, addressed by repository-relative path.
pub fn builtin_asset(name: &str) -> Option<&'static str> {
    ASSETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn activity_name(index: u8) -> &'static str {
    match index {
        1 => "fill medication dispenser",
        2 => "watch DVD",
        3 => "water plants",
        4 => "converse on phone",
        5 => "write birthday card",
        6 => "prepare meal",
        7 => "sweep and clean",
        8 => "select outfit",
        _ => "unknown",
    }
}

/// Importer events per activity: each inner list is one event, each entry
/// a tag on the placing node.
fn importer_events(index: u8) -> &'static [&'static [&'static str]] {
    match index {
        1 => &[&["NearCabinet2"]],
        2 => &[&["InLivingRoom"]],
        3 => &[&["NearCabinet1"], &["NearSink"], &["InLivingRoom"]],
        4 => &[&["NearTable2"]],
        5 => &[&["NearTable1"]],
        6 => &[&["InKitchen"]],
        7 => &[&["InLivingRoom"], &["InKitchen"]],
        8 => &[&["InCorridor"], &["NearSofa"], &["NearTable1"]],
        _ => &[],
    }
}

/// Model node, importer and detector of one activity.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityPackage {
    pub index: u8,
    pub node: String,
    pub model: Model,
    pub importer: ProcedureSpec,
    pub detector: ProcedureSpec,
}

impl ActivityPackage {
    pub fn recognized_rule(&self) -> String {
        format!("{TAG_RECOGNIZED}: name={} state=⊤", self.model.final_name)
    }
}

fn model_asset(index: u8) -> String {
    format!("models/a{index}.model")
}

fn package(index: u8) -> ActivityPackage {
    let node = format!("O{index}");
    let text = builtin_asset(&model_asset(index)).expect("every activity has a model asset");
    let model = parse_model(text).expect("builtin models parse");
    let events = importer_events(index)
        .iter()
        .map(|ev| ev.iter().map(|tag| ConditionSpec::tag(PLACING_NODE, *tag)).collect())
        .collect();
    let mut importer_params = toml::Table::new();
    importer_params.insert("source".into(), PLACING_NODE.into());
    let mut detector_params = toml::Table::new();
    detector_params.insert("activity".into(), i64::from(index).into());
    ActivityPackage {
        index,
        importer: ProcedureSpec {
            id: format!("T{index}"),
            implementation: "importer".into(),
            target: node.clone(),
            params: importer_params,
            events,
        },
        detector: ProcedureSpec {
            id: format!("D{index}"),
            implementation: "detector".into(),
            target: node.clone(),
            params: detector_params,
            events: vec![vec![ConditionSpec::tag(node.clone(), TAG_RECOGNIZED)]],
        },
        node,
        model,
    }
}

pub fn builtin_packages() -> Vec<ActivityPackage> {
    (1..=ACTIVITY_COUNT).map(package).collect()
}

/// The CASAS network built from compiled-in assets: placing node `O0` and
/// the eight packages.
pub fn builtin_network() -> NetworkDef {
    let mut nodes = vec![NodeDef {
        id: PLACING_NODE.into(),
        policy: StorePolicy::Overwrite,
        tag_rules: Vec::new(),
        models: Vec::new(),
        thresholds: Default::default(),
        topology: Some("builtin:data/casas_topology.txt".into()),
        complexity_bound: Some(crate::placing::DEFAULT_COMPLEXITY_BOUND),
    }];
    let mut procedures = Vec::new();
    for pkg in builtin_packages() {
        nodes.push(NodeDef {
            id: pkg.node.clone(),
            policy: StorePolicy::Append,
            tag_rules: vec![pkg.recognized_rule()],
            models: vec![format!("builtin:{}", model_asset(pkg.index))],
            thresholds: Default::default(),
            topology: None,
            complexity_bound: None,
        });
        procedures.push(pkg.importer);
        procedures.push(pkg.detector);
    }
    NetworkDef { nodes, procedures, base_dir: None }
}
