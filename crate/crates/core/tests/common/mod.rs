#![allow(dead_code)]

use std::path::PathBuf;

use fluentnet::casas::{build_plan, parse_script, Mapping, ReplayPlan, Run};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn script(name: &str) -> Run {
    let path = root().join("data/scripts").join(format!("{name}.script"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_script(&text, name, &Mapping::builtin()).unwrap()
}

pub fn single(name: &str) -> ReplayPlan {
    build_plan(&[script(name)], 0, 0)
}

pub const NOMINAL: [&str; 8] = ["a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8"];
