//! Temporal rules, chained models and their closed-world evaluator.

pub mod dsl;
mod eval;
mod model;

pub use dsl::{parse_model, ParseError};
pub use eval::{
    accumulate_duration, bind, check_constraints, derive, dwell_crossing, evaluate_model, fire,
    Binding, EvalError, Evaluation,
};
pub use model::{
    Consequent, DwellRule, Model, ModelError, NameBinding, Offset, Pattern, Relation, Rule,
    TemporalConstraint, Thresholds, TimeExpr,
};
