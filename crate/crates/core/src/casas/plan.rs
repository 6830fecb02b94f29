use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{LabelWindow, Run, SensorEvent};
use crate::time::Timestamp;

pub const DEFAULT_GAP_MS: u64 = 3 * 60_000;

/// A run placed on the global timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedRun {
    /// Position of the run in the input list.
    pub source: usize,
    pub name: String,
    pub start: Timestamp,
    pub end: Timestamp,
    /// Events shifted onto the timeline.
    pub events: Vec<SensorEvent>,
}

/// Runs shuffled by a seed and concatenated with a gap between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayPlan {
    pub runs: Vec<PlannedRun>,
    pub gap_ms: u64,
    pub seed: u64,
}

/// Event as delivered by the replay driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayEvent {
    /// Index into [`ReplayPlan::runs`].
    pub run: usize,
    pub event: SensorEvent,
}

/// Shuffles `runs` with a seeded generator, then lays them end to end so
/// that each run starts `gap_ms` after the previous one ends.
pub fn build_plan(runs: &[Run], gap_ms: u64, seed: u64) -> ReplayPlan {
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut planned = Vec::with_capacity(runs.len());
    let mut cursor = 0u64;
    for (k, &src) in order.iter().enumerate() {
        let run = &runs[src];
        if k > 0 {
            cursor += gap_ms;
        }
        let first = run.start().unwrap_or(Timestamp::ZERO);
        let events: Vec<SensorEvent> = run
            .events
            .iter()
            .map(|e| SensorEvent { time: Timestamp(cursor + (e.time.0 - first.0)), ..e.clone() })
            .collect();
        let start = Timestamp(cursor);
        cursor += run.duration_ms();
        planned.push(PlannedRun {
            source: src,
            name: run.name.clone(),
            start,
            end: Timestamp(cursor),
            events,
        });
    }
    ReplayPlan { runs: planned, gap_ms, seed }
}

impl ReplayPlan {
    pub fn event_count(&self) -> usize {
        self.runs.iter().map(|r| r.events.len()).sum()
    }

    /// Every event in timeline order.
    pub fn events(&self) -> impl Iterator<Item = ReplayEvent> + '_ {
        self.runs.iter().enumerate().flat_map(|(i, r)| {
            r.events.iter().map(move |e| ReplayEvent { run: i, event: e.clone() })
        })
    }

    pub fn end(&self) -> Timestamp {
        self.runs.last().map_or(Timestamp::ZERO, |r| r.end)
    }

    /// Label windows on the timeline, indexed by planned run.
    pub fn label_windows(&self) -> Vec<LabelWindow> {
        self.runs
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                Run { name: r.name.clone(), events: r.events.clone() }.label_windows(i)
            })
            .collect()
    }
}
