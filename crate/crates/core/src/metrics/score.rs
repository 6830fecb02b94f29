use std::collections::BTreeMap;

use crate::casas::LabelWindow;
use crate::metrics::RecognitionRecord;
use crate::time::Timestamp;

pub const DEFAULT_GRACE_MS: u64 = 60_000;

/// True-positive rates of the original dataset study, activities 1..8.
pub const BASELINE_TP: [f64; 8] = [65.6, 86.2, 28.4, 58.9, 82.8, 82.6, 88.1, 67.3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreConfig {
    /// How long after a window's end a recognition still matches it.
    pub grace_ms: u64,
    /// Early recognitions count as zero delay instead of negative.
    pub clamp_early: bool,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { grace_ms: DEFAULT_GRACE_MS, clamp_early: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    TruePositive,
    Misclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowOutcome {
    TruePositive,
    Misclassified,
    Unknown,
}

/// One activity's row of the rates table.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub activity: u8,
    pub instances: usize,
    pub true_positive: usize,
    pub unknown: usize,
    pub misclassified: usize,
    /// Records of this activity that matched no window of their own.
    pub false_alarms: usize,
}

impl RateRow {
    fn pct(&self, n: usize) -> Option<f64> {
        (self.instances > 0).then(|| 100.0 * n as f64 / self.instances as f64)
    }

    pub fn true_positive_pct(&self) -> Option<f64> {
        self.pct(self.true_positive)
    }

    pub fn unknown_pct(&self) -> Option<f64> {
        self.pct(self.unknown)
    }

    pub fn misclassified_pct(&self) -> Option<f64> {
        self.pct(self.misclassified)
    }

    pub fn baseline(&self) -> Option<f64> {
        BASELINE_TP.get(usize::from(self.activity).wrapping_sub(1)).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayRow {
    pub activity: u8,
    pub matched: usize,
    pub late: usize,
    pub worst_ms: i64,
    pub average_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub rates: Vec<RateRow>,
    pub delays: Vec<DelayRow>,
    /// Per record, in input order.
    pub records: Vec<RecordOutcome>,
    /// Per window, in input order.
    pub windows: Vec<WindowOutcome>,
}

fn covers(w: &LabelWindow, t: Timestamp, grace: u64) -> bool {
    w.start <= t && t <= w.end + grace
}

/// Finds the window a recognition belongs to: the earliest-ending window of
/// its own activity covering it, else any covering window.
fn matching_window(windows: &[LabelWindow], r: &RecognitionRecord, grace: u64) -> Option<usize> {
    let covering = || windows.iter().enumerate().filter(|(_, w)| covers(w, r.recognized_at, grace));
    covering()
        .filter(|(_, w)| w.activity == r.activity)
        .min_by_key(|(_, w)| w.end)
        .or_else(|| covering().min_by_key(|(_, w)| w.end))
        .map(|(i, _)| i)
}

/// Attaches the matched window and its run to every record.
pub fn annotate(records: &mut [RecognitionRecord], windows: &[LabelWindow], grace_ms: u64) {
    for r in records {
        match matching_window(windows, r, grace_ms) {
            Some(i) => {
                r.matched_window = Some((windows[i].start, windows[i].end));
                r.run = Some(windows[i].run);
            }
            None => r.matched_window = None,
        }
    }
}

/// Scores recognitions against label windows.
pub fn score(records: &[RecognitionRecord], windows: &[LabelWindow], config: ScoreConfig) -> Scores {
    let mut record_outcomes = Vec::with_capacity(records.len());
    // per window: first correct recognition, and whether any wrong one landed
    let mut correct: Vec<Option<Timestamp>> = vec![None; windows.len()];
    let mut wrong = vec![false; windows.len()];
    let mut false_alarms: BTreeMap<u8, usize> = BTreeMap::new();
    for r in records {
        let m = matching_window(windows, r, config.grace_ms);
        match m {
            Some(i) if windows[i].activity == r.activity => {
                let first = correct[i].get_or_insert(r.recognized_at);
                *first = (*first).min(r.recognized_at);
                record_outcomes.push(RecordOutcome::TruePositive);
            }
            other => {
                if let Some(i) = other {
                    wrong[i] = true;
                }
                *false_alarms.entry(r.activity).or_default() += 1;
                record_outcomes.push(RecordOutcome::Misclassified);
            }
        }
    }
    let window_outcomes: Vec<WindowOutcome> = (0..windows.len())
        .map(|i| match (correct[i], wrong[i]) {
            (Some(_), _) => WindowOutcome::TruePositive,
            (None, true) => WindowOutcome::Misclassified,
            (None, false) => WindowOutcome::Unknown,
        })
        .collect();

    let mut rates = Vec::new();
    let mut delays = Vec::new();
    for activity in 1..=8u8 {
        let mut row = RateRow {
            activity,
            instances: 0,
            true_positive: 0,
            unknown: 0,
            misclassified: 0,
            false_alarms: false_alarms.get(&activity).copied().unwrap_or(0),
        };
        let mut d: Vec<i64> = Vec::new();
        for (i, w) in windows.iter().enumerate().filter(|(_, w)| w.activity == activity) {
            row.instances += 1;
            match window_outcomes[i] {
                WindowOutcome::TruePositive => {
                    row.true_positive += 1;
                    let at = correct[i].expect("true positives have a recognition");
                    let delay = at.0 as i64 - w.end.0 as i64;
                    d.push(if config.clamp_early { delay.max(0) } else { delay });
                }
                WindowOutcome::Misclassified => row.misclassified += 1,
                WindowOutcome::Unknown => row.unknown += 1,
            }
        }
        rates.push(row);
        delays.push(DelayRow {
            activity,
            matched: d.len(),
            late: d.iter().filter(|&&x| x > 0).count(),
            worst_ms: d.iter().copied().max().unwrap_or(0),
            average_ms: if d.is_empty() { 0.0 } else { d.iter().sum::<i64>() as f64 / d.len() as f64 },
        });
    }
    Scores { rates, delays, records: record_outcomes, windows: window_outcomes }
}
