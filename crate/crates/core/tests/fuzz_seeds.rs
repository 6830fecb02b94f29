//! Runs the checked-in fuzz corpus through the same checks as the fuzz
//! targets, so the seeds stay valid inputs.

mod common;

use std::fs;
use std::path::PathBuf;

use fluentnet::casas::{parse_log, parse_script, Mapping};
use fluentnet::fluent::{Statement, TagRule};
use fluentnet::network::NetworkDef;
use fluentnet::placing::{contextualize, Topology};
use fluentnet::rules::parse_model;
use fluentnet::time::{format_duration, parse_duration, Timestamp};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = common::root().join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let text = fs::read_to_string(&path).unwrap();
            (path, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn model_seeds_round_trip() {
    for (path, text) in seeds("model_dsl") {
        let model = parse_model(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_model(&model.to_string()).unwrap(), model);
    }
}

#[test]
fn topology_seeds_parse() {
    for (path, text) in seeds("topology") {
        let topo: Topology = text.parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let m1 = contextualize(&topo, &Statement::sensor("M1", true, Timestamp(1)));
        assert!(!m1.is_empty(), "{}", path.display());
    }
}

#[test]
fn network_seeds_round_trip() {
    for (path, text) in seeds("network_def") {
        let def = NetworkDef::parse(&text, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = NetworkDef::parse(&def.to_toml(), None).unwrap();
        assert_eq!(again.procedures, def.procedures);
    }
}

#[test]
fn log_and_script_seeds_parse() {
    let m = Mapping::builtin();
    for (path, text) in seeds("casas_log") {
        let run = parse_log(&text, "seed", &m).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!run.events.is_empty());
    }
    for (path, text) in seeds("synth_script") {
        let run = parse_script(&text, "seed", &m).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!run.events.is_empty());
    }
    for (path, text) in seeds("mapping") {
        Mapping::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn tag_rule_and_duration_seeds_round_trip() {
    for (path, text) in seeds("tag_rule") {
        let rule: TagRule = text.parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(rule.to_string().parse::<TagRule>().unwrap(), rule);
    }
    for (path, text) in seeds("duration") {
        let ms = parse_duration(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_duration(&format_duration(ms)), Ok(ms));
    }
}
