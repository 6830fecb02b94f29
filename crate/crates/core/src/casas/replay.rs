use std::sync::mpsc::{sync_channel, RecvTimeoutError, TrySendError};
use std::thread;
use std::time::{Duration, Instant};

use super::plan::{ReplayEvent, ReplayPlan};
use crate::time::Timestamp;

/// How timeline time maps onto real time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// Jump straight from deadline to deadline; no sleeping.
    Virtual,
    /// Deliver events `delta / speed` apart in real time through a bounded buffer.
    Wall { speed: f64, buffer: usize },
}

impl Pacing {
    pub fn wall(speed: f64) -> Pacing {
        Pacing::Wall { speed, buffer: 1024 }
    }
}

/// Receiver side of a replay: the data importer plus the scheduler clock.
pub trait ReplaySink {
    /// Brings the consumer's clock to `now`, running whatever falls due.
    fn advance_to(&mut self, now: Timestamp);
    /// Next instant at which the consumer has work of its own.
    fn next_deadline(&self) -> Option<Timestamp>;
    fn deliver(&mut self, event: &ReplayEvent);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayReport {
    pub delivered: usize,
    pub dropped: usize,
    pub wall: Duration,
    pub timeline_end: Timestamp,
}

/// Replays the plan into `sink` and then keeps the clock running for
/// `tail_ms` of timeline time so pending work can settle.
pub fn replay<S: ReplaySink>(plan: &ReplayPlan, pacing: Pacing, tail_ms: u64, sink: &mut S) -> ReplayReport {
    let started = Instant::now();
    let end = plan.end() + tail_ms;
    let mut report = match pacing {
        Pacing::Virtual => replay_virtual(plan, end, sink),
        Pacing::Wall { speed, buffer } => replay_wall(plan, speed, buffer.max(1), end, sink),
    };
    report.wall = started.elapsed();
    report.timeline_end = end;
    report
}

fn replay_virtual<S: ReplaySink>(plan: &ReplayPlan, end: Timestamp, sink: &mut S) -> ReplayReport {
    let mut report = ReplayReport::default();
    for ev in plan.events() {
        sink.advance_to(ev.event.time);
        sink.deliver(&ev);
        report.delivered += 1;
    }
    sink.advance_to(end);
    report
}

fn replay_wall<S: ReplaySink>(
    plan: &ReplayPlan,
    speed: f64,
    buffer: usize,
    end: Timestamp,
    sink: &mut S,
) -> ReplayReport {
    assert!(speed > 0.0, "speed must be positive");
    let origin = Instant::now();
    let to_wall = move |t: Timestamp| Duration::from_secs_f64(t.0 as f64 / 1000.0 / speed);
    // monotone: an event may be handed over a hair before its due time
    let mut clock = Timestamp::ZERO;
    let mut timeline_now = move |floor: Timestamp| {
        let t = Timestamp((origin.elapsed().as_secs_f64() * speed * 1000.0) as u64);
        clock = clock.max(t).max(floor);
        clock
    };

    let (tx, rx) = sync_channel::<ReplayEvent>(buffer);
    let events: Vec<ReplayEvent> = plan.events().collect();
    let producer = thread::spawn(move || {
        let mut dropped = 0usize;
        for ev in events {
            let due = origin + to_wall(ev.event.time);
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
            match tx.try_send(ev) {
                Ok(()) => {}
                Err(TrySendError::Full(_)) => dropped += 1,
                Err(TrySendError::Disconnected(_)) => break,
            }
        }
        dropped
    });

    let mut report = ReplayReport::default();
    loop {
        let now = timeline_now(Timestamp::ZERO);
        sink.advance_to(now);
        let wait = match sink.next_deadline() {
            Some(d) => to_wall(d).saturating_sub(origin.elapsed()),
            None => Duration::from_millis(20),
        }
        .min(Duration::from_millis(20));
        match rx.recv_timeout(wait) {
            Ok(ev) => {
                sink.advance_to(timeline_now(ev.event.time));
                sink.deliver(&ev);
                report.delivered += 1;
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
    }
    report.dropped = producer.join().unwrap_or(0);
    loop {
        let now = timeline_now(Timestamp::ZERO);
        if now >= end {
            break;
        }
        sink.advance_to(now);
        let next = sink.next_deadline().unwrap_or(end).min(end);
        let wait = to_wall(next).saturating_sub(origin.elapsed());
        thread::sleep(wait.min(Duration::from_millis(20)).max(Duration::from_millis(1)));
    }
    sink.advance_to(timeline_now(end));
    report
}
