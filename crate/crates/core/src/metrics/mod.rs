//! Recognition scoring, delay statistics and trace export.

mod export;
mod records;
mod score;

pub use export::{
    export, ExportError, ExportOptions, DELAYS_CSV, EVAL_TRACE_CSV, LABELS_CSV, RATES_CSV, RECOGNITIONS_CSV,
    SUMMARY_TXT,
};
pub use records::{EvalSample, Failure, MetricEvent, RecognitionRecord};
pub use score::{
    annotate, score, DelayRow, RateRow, RecordOutcome, ScoreConfig, Scores, WindowOutcome,
    BASELINE_TP, DEFAULT_GRACE_MS,
};
