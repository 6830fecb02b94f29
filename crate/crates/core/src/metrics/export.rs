use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::score::{annotate, score, RecordOutcome, ScoreConfig, Scores};
use super::{EvalSample, RecognitionRecord};
use crate::adl::activity_name;
use crate::casas::LabelWindow;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportOptions {
    pub score: ScoreConfig,
    /// Only this node's rows go to `eval_trace.csv`.
    pub node: Option<String>,
    /// Zero wall-clock fields and evaluation durations so identical inputs
    /// give byte-identical files.
    pub deterministic: bool,
}

pub const RECOGNITIONS_CSV: &str = "recognitions.csv";
pub const RATES_CSV: &str = "rates.csv";
pub const DELAYS_CSV: &str = "delays.csv";
pub const EVAL_TRACE_CSV: &str = "eval_trace.csv";
pub const LABELS_CSV: &str = "labels.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

fn fmt_pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_default()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn csv(&self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), ExportError> {
        let path = self.dir.join(name);
        let err = |source| ExportError::Csv { path: path.clone(), source };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|source| ExportError::Io { path: path.clone(), source })
    }
}

/// Scores the run and writes the CSV files plus `summary.txt` into `dir`,
/// creating it if needed. `extra` lines are appended to the summary.
pub fn export(
    dir: &Path,
    records: &[RecognitionRecord],
    samples: &[EvalSample],
    windows: &[LabelWindow],
    extra: &[(String, String)],
    options: &ExportOptions,
) -> Result<Scores, ExportError> {
    fs::create_dir_all(dir).map_err(|source| ExportError::Io { path: dir.to_path_buf(), source })?;
    let out = Out { dir };
    let mut records = records.to_vec();
    annotate(&mut records, windows, options.score.grace_ms);
    let scores = score(&records, windows, options.score);

    let rows = records
        .iter()
        .zip(&scores.records)
        .map(|(r, outcome)| {
            vec![
                r.activity.to_string(),
                r.recognized_at.0.to_string(),
                r.node.clone(),
                if options.deterministic { "0".into() } else { r.wall_ms.to_string() },
                opt(r.run),
                opt(r.matched_window.map(|w| w.0 .0)),
                opt(r.matched_window.map(|w| w.1 .0)),
                match outcome {
                    RecordOutcome::TruePositive => "true_positive".into(),
                    RecordOutcome::Misclassified => "misclassified".into(),
                },
            ]
        })
        .collect();
    out.csv(
        RECOGNITIONS_CSV,
        &["activity", "recognized_at_ms", "node", "wall_ms", "run", "window_start_ms", "window_end_ms", "outcome"],
        rows,
    )?;

    let rows = scores
        .rates
        .iter()
        .map(|r| {
            vec![
                r.activity.to_string(),
                activity_name(r.activity).to_string(),
                r.instances.to_string(),
                fmt_pct(r.true_positive_pct()),
                fmt_pct(r.unknown_pct()),
                fmt_pct(r.misclassified_pct()),
                r.false_alarms.to_string(),
                fmt_pct(r.baseline()),
            ]
        })
        .collect();
    out.csv(
        RATES_CSV,
        &[
            "activity",
            "name",
            "instances",
            "true_positive_pct",
            "unknown_pct",
            "misclassified_pct",
            "false_alarms",
            "baseline_true_positive_pct",
        ],
        rows,
    )?;

    let rows = scores
        .delays
        .iter()
        .map(|d| {
            vec![
                d.activity.to_string(),
                activity_name(d.activity).to_string(),
                d.matched.to_string(),
                d.late.to_string(),
                d.worst_ms.to_string(),
                format!("{:.1}", d.average_ms),
            ]
        })
        .collect();
    out.csv(DELAYS_CSV, &["activity", "name", "matched", "late", "worst_ms", "average_ms"], rows)?;

    let rows = samples
        .iter()
        .filter(|s| options.node.as_deref().is_none_or(|n| n == s.node))
        .map(|s| {
            vec![
                s.node.clone(),
                s.at.0.to_string(),
                if options.deterministic { "0".into() } else { s.eval_duration_ns.to_string() },
                s.complexity.to_string(),
                s.propagated.to_string(),
            ]
        })
        .collect();
    out.csv(EVAL_TRACE_CSV, &["node", "time_ms", "duration_ns", "complexity", "propagated"], rows)?;

    let rows = windows
        .iter()
        .map(|w| vec![w.run.to_string(), w.activity.to_string(), w.start.0.to_string(), w.end.0.to_string()])
        .collect();
    out.csv(LABELS_CSV, &["run", "activity", "start_ms", "end_ms"], rows)?;

    let mut text = String::new();
    let _ = writeln!(text, "recognitions: {}", records.len());
    let _ = writeln!(text, "label windows: {}", windows.len());
    let _ = writeln!(text, "eval samples: {}", samples.len());
    let _ = writeln!(text, "grace: {} ms", options.score.grace_ms);
    for (k, v) in extra {
        let _ = writeln!(text, "{k}: {v}");
    }
    let _ = writeln!(text);
    let _ = writeln!(text, "{:<4} {:<28} {:>5} {:>7} {:>7} {:>7} {:>9}", "id", "activity", "n", "tp%", "unk%", "mis%", "baseline");
    for r in &scores.rates {
        let _ = writeln!(
            text,
            "A{:<3} {:<28} {:>5} {:>7} {:>7} {:>7} {:>9}",
            r.activity,
            activity_name(r.activity),
            r.instances,
            fmt_pct(r.true_positive_pct()),
            fmt_pct(r.unknown_pct()),
            fmt_pct(r.misclassified_pct()),
            fmt_pct(r.baseline()),
        );
    }
    let path = dir.join(SUMMARY_TXT);
    fs::write(&path, text).map_err(|source| ExportError::Io { path, source })?;
    Ok(scores)
}
