mod common;

use std::fs;

use fluentnet::adl::builtin_network;
use fluentnet::casas::{build_plan, parse_script, Mapping, Pacing};
use fluentnet::harness::{Session, SessionConfig};
use fluentnet::metrics::{export, ExportOptions, EVAL_TRACE_CSV, RECOGNITIONS_CSV};
use fluentnet::network::NetworkDef;

fn recognized(def: &NetworkDef, script: &str) -> Vec<(u8, u64)> {
    let plan = common::single(script);
    Session::new(def, SessionConfig::default())
        .unwrap()
        .run(&plan, Pacing::Virtual)
        .recognitions
        .iter()
        .map(|r| (r.activity, r.recognized_at.0))
        .collect()
}

fn with_threshold(node: &str, name: &str, value: &str) -> NetworkDef {
    let mut def = builtin_network();
    def.node_def_mut(node).unwrap().thresholds.insert(name.into(), value.into());
    def
}

#[test]
fn shipped_network_file_matches_builtin() {
    let file = NetworkDef::load(&common::root().join("networks/casas.toml")).unwrap();
    let builtin = builtin_network();
    assert_eq!(file.procedures, builtin.procedures);
    for (a, b) in file.nodes.iter().zip(&builtin.nodes) {
        assert_eq!((&a.id, a.policy, &a.tag_rules), (&b.id, b.policy, &b.tag_rules));
        assert_eq!(file.models(a).unwrap(), builtin.models(b).unwrap());
    }
    assert_eq!(file.nodes.len(), builtin.nodes.len());
}

#[test]
fn dwell_thresholds_above_the_scripted_dwell_turn_recognition_off() {
    // the scripted stays last 25 s against a 20 s threshold
    assert_eq!(recognized(&builtin_network(), "a3").len(), 1);
    assert!(recognized(&with_threshold("O3", "ε3", "40s"), "a3").is_empty());
    assert_eq!(recognized(&builtin_network(), "a7").len(), 1);
    assert!(recognized(&with_threshold("O7", "ε7", "40s"), "a7").is_empty());
}

#[test]
fn delay_threshold_above_the_scripted_gap_gives_unknown() {
    assert!(recognized(&with_threshold("O8", "δ8", "40s"), "a8").is_empty());
    assert!(recognized(&with_threshold("O4", "δ4", "50s"), "a4").is_empty());
}

#[test]
fn two_calls_give_two_recognitions() {
    let text = "0 M3 ON\n+2s M6 ON 4\n+2s P1 ON 4\n+40s P1 OFF 4\n+10s P1 ON 4\n+35s P1 OFF 4\n+3s M3 ON\n";
    let run = parse_script(text, "twice", &Mapping::builtin()).unwrap();
    let plan = build_plan(&[run], 0, 0);
    let out = Session::builtin(SessionConfig::default()).unwrap().run(&plan, Pacing::Virtual);
    let got: Vec<(u8, u64)> = out.recognitions.iter().map(|r| (r.activity, r.recognized_at.0)).collect();
    assert_eq!(got, [(4, 44_000), (4, 89_000)]);
}

#[test]
fn interwoven_script_is_fully_recognized() {
    let got = recognized(&builtin_network(), "interwoven");
    let mut activities: Vec<u8> = got.iter().map(|r| r.0).collect();
    activities.sort();
    assert_eq!(activities, (1..=8).collect::<Vec<_>>());
}

#[test]
fn identical_seeds_give_identical_files() {
    let runs: Vec<_> = common::NOMINAL.iter().map(|n| common::script(n)).collect();
    let opts = ExportOptions { deterministic: true, ..Default::default() };
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let plan = build_plan(&runs, 180_000, 11);
        let out = Session::builtin(SessionConfig::default()).unwrap().run(&plan, Pacing::Virtual);
        let dir = tempfile::tempdir().unwrap();
        export(dir.path(), &out.recognitions, &out.samples, &plan.label_windows(), &[], &opts).unwrap();
        let files: Vec<Vec<u8>> = [RECOGNITIONS_CSV, EVAL_TRACE_CSV, "rates.csv", "delays.csv", "summary.txt"]
            .iter()
            .map(|f| fs::read(dir.path().join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0][0].len() > 100);
}

#[test]
fn eval_trace_is_monotone_per_node() {
    let runs: Vec<_> = ["a6", "a1", "a3"].iter().map(|n| common::script(n)).collect();
    let plan = build_plan(&runs, 180_000, 2);
    let out = Session::builtin(SessionConfig::default()).unwrap().run(&plan, Pacing::Virtual);
    let mut last = std::collections::HashMap::new();
    for s in &out.samples {
        let prev = last.insert(s.node.clone(), s.at).unwrap_or_default();
        assert!(s.at >= prev, "{} went back from {prev} to {}", s.node, s.at);
    }
    assert!(last.contains_key("O0"));
}

#[test]
fn speed_one_is_repeatable() {
    assert_eq!(recognized(&builtin_network(), "interwoven"), recognized(&builtin_network(), "interwoven"));
}
