use serde::Serialize;

use crate::time::Timestamp;

/// One notification that activity `activity` was recognized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecognitionRecord {
    pub activity: u8,
    pub recognized_at: Timestamp,
    /// Node that produced the recognition.
    pub node: String,
    /// Wall-clock milliseconds since the session started.
    pub wall_ms: u64,
    pub run: Option<usize>,
    pub matched_window: Option<(Timestamp, Timestamp)>,
}

impl RecognitionRecord {
    pub fn new(activity: u8, recognized_at: Timestamp, node: impl Into<String>) -> Self {
        RecognitionRecord {
            activity,
            recognized_at,
            node: node.into(),
            wall_ms: 0,
            run: None,
            matched_window: None,
        }
    }
}

/// One reasoner update of a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalSample {
    pub node: String,
    pub at: Timestamp,
    pub eval_duration_ns: u64,
    pub complexity: usize,
    pub propagated: usize,
}

/// A procedure execution that returned an error or panicked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub procedure: String,
    pub at: Timestamp,
    pub message: String,
}

/// Everything procedures report, delivered through one channel.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricEvent {
    Eval(EvalSample),
    Recognition(RecognitionRecord),
    Failure(Failure),
}
