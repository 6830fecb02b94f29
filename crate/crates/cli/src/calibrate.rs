//! Threshold sweep: replays the labelled input once per candidate value and
//! keeps the one with the best true-positive rate for the node's activity.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use fluentnet::harness::Session;
use fluentnet::metrics::{annotate, score};
use fluentnet::network::NetworkDef;
use fluentnet::time::{format_duration, parse_duration};

use crate::{InputArgs, RunArgs};

#[derive(Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Only sweep this model node (repeatable).
    #[arg(long = "sweep-node")]
    sweep_node: Vec<String>,
    /// Candidate values, comma separated. Defaults to multiples of each
    /// threshold's current value.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
}

const FACTORS: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

struct Trial {
    node: String,
    threshold: String,
    value: i64,
    true_positive: usize,
    instances: usize,
    false_alarms: usize,
}

/// Activity index each model node reports, read off the detector that watches it.
fn node_activities(def: &NetworkDef) -> BTreeMap<String, u8> {
    let mut out = BTreeMap::new();
    for p in &def.procedures {
        let Some(activity) = p.params.get("activity").and_then(|v| v.as_integer()) else { continue };
        let Ok(activity) = u8::try_from(activity) else { continue };
        for c in p.events.iter().flatten() {
            out.insert(c.node.clone(), activity);
        }
    }
    out
}

fn current_thresholds(def: &NetworkDef, node: &str) -> Result<BTreeMap<String, i64>> {
    let nd = def.node_def(node).context("unknown node")?;
    let mut out = BTreeMap::new();
    for m in def.models(nd)? {
        out.extend(m.thresholds);
    }
    for (k, v) in &nd.thresholds {
        out.insert(k.clone(), parse_duration(v)?);
    }
    Ok(out)
}

pub fn run(args: &CalibrateArgs) -> Result<()> {
    let plan = args.input.plan()?;
    let windows = plan.label_windows();
    if windows.is_empty() {
        bail!("calibration needs labelled input");
    }
    let base = args.run.network()?;
    let config = args.run.session_config()?;
    let pacing = args.run.pacing()?;
    let score_config = args.run.score_config();
    let explicit: Vec<i64> = args.values.iter().map(|v| parse_duration(v)).collect::<Result<_, _>>()?;

    let activities = node_activities(&base);
    let mut trials = Vec::new();
    let mut best: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (node, &activity) in &activities {
        if !args.sweep_node.is_empty() && !args.sweep_node.contains(node) {
            continue;
        }
        for (name, current) in current_thresholds(&base, node)? {
            let mut candidates: Vec<i64> = if explicit.is_empty() {
                FACTORS.iter().map(|f| ((current as f64 * f) / 500.0).round() as i64 * 500).collect()
            } else {
                explicit.clone()
            };
            candidates.sort();
            candidates.dedup();
            for value in candidates {
                let mut def = base.clone();
                def.node_def_mut(node).unwrap().thresholds.insert(name.clone(), format_duration(value));
                let mut session = Session::new(&def, config)?;
                let mut out = session.run(&plan, pacing);
                annotate(&mut out.recognitions, &windows, score_config.grace_ms);
                let scores = score(&out.recognitions, &windows, score_config);
                let row = &scores.rates[usize::from(activity) - 1];
                log::info!("{node} {name}={} -> {}/{}", format_duration(value), row.true_positive, row.instances);
                let trial = Trial {
                    node: node.clone(),
                    threshold: name.clone(),
                    value,
                    true_positive: row.true_positive,
                    instances: row.instances,
                    false_alarms: scores.rates.iter().map(|r| r.false_alarms).sum(),
                };
                let key = (node.clone(), name.clone());
                let rank = |t: &Trial| (t.true_positive, Reverse(t.false_alarms), Reverse((t.value - current).abs()));
                let better = best.get(&key).is_none_or(|&i| rank(&trial) > rank(&trials[i]));
                trials.push(trial);
                if better {
                    best.insert(key, trials.len() - 1);
                }
            }
        }
    }
    if trials.is_empty() {
        bail!("no thresholds to sweep");
    }

    std::fs::create_dir_all(&args.run.out)?;
    let mut csv = String::from("node,threshold,value_ms,true_positive,instances,false_alarms,chosen\n");
    let chosen: Vec<usize> = best.values().copied().collect();
    for (i, t) in trials.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            t.node,
            t.threshold,
            t.value,
            t.true_positive,
            t.instances,
            t.false_alarms,
            chosen.contains(&i)
        )?;
    }
    let path: PathBuf = args.run.out.join("calibration.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;

    // each threshold is swept with the others at their current values
    println!("suggested thresholds (set under the node's `thresholds` table):");
    for &i in best.values() {
        let t = &trials[i];
        println!("  {} {} = {}  ({}/{} recognized)", t.node, t.threshold, format_duration(t.value), t.true_positive, t.instances);
    }
    println!("all trials in {}", path.display());
    Ok(())
}
