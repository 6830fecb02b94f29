//! CASAS-style sensor logs, synthetic scripts, replay plans and the replay driver.

mod dataset;
mod mapping;
mod plan;
mod replay;

pub use dataset::{
    parse_dataset, parse_label, parse_log, parse_script, DatasetError, LabelWindow, Run,
    SensorEvent, Variant,
};
pub use mapping::{Mapping, Normalized};
pub use plan::{build_plan, PlannedRun, ReplayEvent, ReplayPlan, DEFAULT_GAP_MS};
pub use replay::{replay, Pacing, ReplayReport, ReplaySink};
