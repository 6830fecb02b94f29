use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use fluentnet::adl::builtin_asset;
use fluentnet::casas::{build_plan, replay, LabelWindow, Pacing, ReplayEvent, ReplaySink, Run, SensorEvent};
use fluentnet::fluent::{Statement, StatementStore, StorePolicy};
use fluentnet::metrics::{score, RecognitionRecord, RecordOutcome, ScoreConfig};
use fluentnet::network::{
    procedure_runnable, ConditionSpec, ImplementationRegistry, Network, Node, Outcome, ProcContext, Procedure,
    ProcedureSpec,
};
use fluentnet::placing::{contextualize, near_name, in_name, Placer, SensorKind, Topology, TAG_LOCATION};
use fluentnet::rules::{
    accumulate_duration, parse_model, Consequent, Model, Offset, Pattern, Rule, TemporalConstraint, TimeExpr,
};
use fluentnet::time::{format_duration, parse_duration, Timestamp};

fn topology() -> Topology {
    builtin_asset("data/casas_topology.txt").unwrap().parse().unwrap()
}

fn sensor_ids() -> Vec<String> {
    builtin_asset("data/casas_topology.txt")
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("sensor ").map(|r| r.split_whitespace().next().unwrap().to_string()))
        .collect()
}

prop_compose! {
    fn sensor_stream(max: usize)(steps in prop::collection::vec((0usize..29, any::<bool>(), 0u64..3_000), 0..max)) -> Vec<(usize, bool, u64)> {
        steps
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn placing_stays_fresh_bounded_and_reachable(stream in sensor_stream(300)) {
        let topo = topology();
        let ids = sensor_ids();
        let bound = topo.complexity_bound(0);
        let mut placer = Placer::new(topo.clone());
        let mut node = Node::new("O0", StorePolicy::Overwrite);
        let mut t = 0;
        let mut latest: BTreeMap<String, u64> = BTreeMap::new();
        for (i, state, dt) in stream {
            t += dt;
            let id = &ids[i % ids.len()];
            let st = Statement::sensor(id.clone(), state, Timestamp(t));
            for out in contextualize(&topo, &st) {
                if out.has_tag(TAG_LOCATION) {
                    let p = topo.placement(id);
                    let reachable = p.near.iter().map(|f| near_name(f)).chain(p.room.iter().map(|r| in_name(r)));
                    prop_assert!(reachable.into_iter().any(|n| n == out.name), "{} from {id}", out.name);
                }
            }
            placer.ingest(&mut node, [st]);
            latest.insert(id.clone(), t);
            prop_assert!(node.complexity() <= bound);
        }
        for (id, t) in latest {
            prop_assert_eq!(node.store.latest(&id).map(|s| s.time), Some(Timestamp(t)));
        }
    }

    #[test]
    fn append_store_keeps_every_fact_in_time_order(items in prop::collection::vec((0u8..4, any::<bool>(), 0u64..50), 0..40)) {
        let mut store = StatementStore::new(StorePolicy::Append);
        let mut distinct = std::collections::BTreeSet::new();
        for (n, state, t) in &items {
            store.insert(Statement::sensor(format!("s{n}"), *state, Timestamp(*t)));
            distinct.insert((*n, *state, *t));
        }
        let times: Vec<Timestamp> = store.iter().map(|s| s.time).collect();
        prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        for (n, state, t) in distinct {
            let name = format!("s{n}");
            prop_assert!(store.contains_fact(&name, state, Timestamp(t)));
        }
        prop_assert!(store.len() <= items.len());
    }

    #[test]
    fn overwrite_store_holds_one_statement_per_name(items in prop::collection::vec((0u8..4, any::<bool>(), 0u64..50), 0..40)) {
        let mut store = StatementStore::new(StorePolicy::Overwrite);
        let mut last = BTreeMap::new();
        for (n, state, t) in items {
            store.insert(Statement::sensor(format!("s{n}"), state, Timestamp(t)));
            last.insert(format!("s{n}"), (state, Timestamp(t)));
        }
        prop_assert_eq!(store.len(), last.len());
        for (name, (state, t)) in last {
            let st = store.latest(&name).unwrap();
            prop_assert_eq!((st.state, st.time), (state, t));
        }
    }

    #[test]
    fn accumulation_matches_millisecond_sweep(
        flips in prop::collection::vec((1u64..20, any::<bool>()), 0..12),
        threshold in 1i64..120,
        tail in 0u64..60,
    ) {
        let mut store = StatementStore::append();
        let mut t = 0;
        let mut history = Vec::new();
        for (dt, state) in flips {
            t += dt;
            store.insert(Statement::sensor("L", state, Timestamp(t)));
            history.push((t, state));
        }
        let clock = t + tail;
        // sweep: millisecond m counts when the latest statement at or before m is ⊤
        let mut total = 0;
        let mut want = None;
        for m in 0..clock {
            let on = history.iter().rev().find(|(at, _)| *at <= m).is_some_and(|(_, s)| *s);
            if on {
                total += 1;
                if total == threshold {
                    want = Some(Timestamp(m + 1));
                    break;
                }
            }
        }
        let got = accumulate_duration(&store, "L", threshold, "Stay", Timestamp(clock)).map(|s| s.time);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn runnable_is_exists_forall(matrix in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..5), 0..5)) {
        let want = matrix.iter().any(|e| e.iter().all(|c| *c));
        prop_assert_eq!(procedure_runnable(&matrix), want);
    }

    #[test]
    fn plans_lay_runs_end_to_end(durations in prop::collection::vec(0u64..100_000, 1..6), gap in 0u64..200_000, seed in any::<u64>()) {
        let runs: Vec<Run> = durations
            .iter()
            .enumerate()
            .map(|(i, d)| Run {
                name: format!("r{i}"),
                events: [500, 500 + d]
                    .iter()
                    .map(|&t| SensorEvent { time: Timestamp(t), sensor: "M1".into(), kind: SensorKind::Motion, value: true, label: Some(1) })
                    .collect(),
            })
            .collect();
        let plan = build_plan(&runs, gap, seed);
        prop_assert_eq!(&plan, &build_plan(&runs, gap, seed));
        let mut sources: Vec<usize> = plan.runs.iter().map(|r| r.source).collect();
        sources.sort();
        prop_assert_eq!(sources, (0..runs.len()).collect::<Vec<_>>());
        let mut cursor = 0;
        for r in &plan.runs {
            prop_assert_eq!(r.start.0, cursor);
            prop_assert_eq!(r.end.0, cursor + durations[r.source]);
            cursor = r.end.0 + gap;
        }
        let times: Vec<Timestamp> = plan.events().map(|e| e.event.time).collect();
        prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(plan.label_windows().len(), runs.len());
    }

    #[test]
    fn rates_rows_sum_to_100(
        windows in prop::collection::vec((1u8..=8, 0u64..1_000, 0u64..200), 0..8),
        records in prop::collection::vec((1u8..=8, 0u64..1_400), 0..10),
    ) {
        let windows: Vec<LabelWindow> = windows
            .iter()
            .enumerate()
            .map(|(i, &(a, s, d))| LabelWindow { run: i, activity: a, start: Timestamp(s), end: Timestamp(s + d) })
            .collect();
        let records: Vec<RecognitionRecord> = records.iter().map(|&(a, t)| RecognitionRecord::new(a, Timestamp(t), "O")).collect();
        let scores = score(&records, &windows, ScoreConfig { grace_ms: 100, clamp_early: true });
        prop_assert_eq!(scores.records.len(), records.len());
        for row in &scores.rates {
            prop_assert_eq!(row.true_positive + row.unknown + row.misclassified, row.instances);
            if row.instances > 0 {
                let sum = row.true_positive_pct().unwrap() + row.unknown_pct().unwrap() + row.misclassified_pct().unwrap();
                prop_assert!((sum - 100.0).abs() < 1e-9);
            }
        }
        let tp = scores.records.iter().filter(|o| **o == RecordOutcome::TruePositive).count();
        let false_alarms: usize = scores.rates.iter().map(|r| r.false_alarms).sum();
        prop_assert_eq!(tp + false_alarms, records.len());
        for d in &scores.delays {
            prop_assert!(d.worst_ms >= 0 && d.average_ms >= 0.0 && d.late <= d.matched);
        }
    }

    #[test]
    fn durations_round_trip(ms in -10_000_000i64..10_000_000) {
        prop_assert_eq!(parse_duration(&format_duration(ms)).unwrap(), ms);
    }

    #[test]
    fn written_models_parse_back(seed in any::<u64>()) {
        let model = random_model(seed);
        let text = model.to_string();
        let back = parse_model(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, model);
    }

    #[test]
    fn dispatches_follow_rising_edges(steps in prop::collection::vec(prop::collection::vec(any::<bool>(), 3), 1..30)) {
        let (mut net, _rx) = Network::new(noop());
        let node = net.register_node(Node::new("N", StorePolicy::Overwrite)).unwrap();
        let c = |i: usize| ConditionSpec::tag("N", format!("c{i}"));
        net.register_procedure(ProcedureSpec {
            id: "p".into(),
            implementation: "noop".into(),
            target: "N".into(),
            params: Default::default(),
            events: vec![vec![c(0), c(1)], vec![c(2)]],
        })
        .unwrap();
        let mut now = 0;
        while now < 1_000 {
            now += 100;
            net.tick(Timestamp(now));
        }
        let mut rising = 0;
        let mut was = false;
        for bits in steps {
            {
                let mut n = node.write();
                n.store.clear();
                for (i, on) in bits.iter().enumerate() {
                    if *on {
                        n.insert(Statement::sensor(format!("s{i}"), true, Timestamp(now)).with_tag(format!("c{i}")));
                    }
                }
            }
            // several polls per step: no re-trigger while the value holds
            for _ in 0..3 {
                now += 500;
                net.tick(Timestamp(now));
            }
            let is = !net.runnable().is_empty();
            prop_assert_eq!(is, (bits[0] && bits[1]) || bits[2]);
            rising += usize::from(is && !was);
            was = is;
        }
        prop_assert_eq!(net.dispatch_count("p"), rising as u64);
    }
}

fn noop() -> ImplementationRegistry {
    let mut reg = ImplementationRegistry::new();
    reg.register("noop", |_spec: &ProcedureSpec| {
        Ok(Arc::new(|_ctx: &mut ProcContext<'_>| Ok(Outcome::done())) as Arc<dyn Procedure>)
    });
    reg
}

fn random_model(seed: u64) -> Model {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_rules = rng.gen_range(1..=3);
    let mut thresholds = BTreeMap::new();
    thresholds.insert("δ".to_string(), rng.gen_range(0..100_000));
    let mut rules = Vec::new();
    for k in 0..n_rules {
        let n_pat = rng.gen_range(1..=3);
        let patterns: Vec<Pattern> = (0..n_pat)
            .map(|i| {
                let state = rng.gen_bool(0.5);
                match rng.gen_range(0..3) {
                    0 => Pattern::tagged(format!("V{i}"), state, "Location"),
                    1 if k > 0 => Pattern::named(format!("V{i}"), true, format!("X{}", rng.gen_range(0..k))),
                    _ => Pattern::named(format!("V{i}"), state, format!("S{}", rng.gen_range(0..4))),
                }
            })
            .collect();
        let var = |rng: &mut rand_chacha::ChaCha8Rng| format!("V{}", rng.gen_range(0..n_pat));
        let constraints = (0..rng.gen_range(0..=2))
            .map(|_| {
                let offset = match rng.gen_range(0..4) {
                    0 => Offset::Fixed(0),
                    1 => Offset::Fixed(rng.gen_range(1..90_000)),
                    2 => Offset::Fixed(-rng.gen_range(1..5_000)),
                    _ => Offset::threshold("δ"),
                };
                let c = TemporalConstraint::before(var(&mut rng), var(&mut rng)).with_offset(offset);
                if rng.gen_bool(0.3) {
                    c.greater()
                } else {
                    c
                }
            })
            .collect();
        let time = match rng.gen_range(0..4) {
            0 => TimeExpr::Of(var(&mut rng)),
            1 => TimeExpr::Max((0..n_pat).map(|i| format!("V{i}")).collect()),
            2 => TimeExpr::Min((0..n_pat).map(|i| format!("V{i}")).collect()),
            _ => TimeExpr::Now,
        };
        rules.push(Rule {
            name: format!("r{k}"),
            patterns,
            constraints,
            consequent: Consequent { name: format!("X{k}"), state: true, time },
        });
    }
    Model { name: "m".into(), rules, dwells: Vec::new(), final_name: format!("X{}", n_rules - 1), thresholds }
}

struct Order(Vec<Timestamp>);

impl ReplaySink for Order {
    fn advance_to(&mut self, _now: Timestamp) {}
    fn next_deadline(&self) -> Option<Timestamp> {
        None
    }
    fn deliver(&mut self, ev: &ReplayEvent) {
        self.0.push(ev.event.time);
    }
}

#[test]
fn fast_wall_replay_keeps_timeline_order() {
    let run = Run {
        name: "burst".into(),
        events: (0..200)
            .map(|i| SensorEvent {
                time: Timestamp(i * 7),
                sensor: "M1".into(),
                kind: SensorKind::Motion,
                value: i % 2 == 0,
                label: None,
            })
            .collect(),
    };
    let plan = build_plan(&[run], 0, 0);
    let mut sink = Order(Vec::new());
    let report = replay(&plan, Pacing::wall(10.0), 0, &mut sink);
    assert_eq!(report.delivered + report.dropped, 200);
    assert!(sink.0.windows(2).all(|w| w[0] <= w[1]));
}
