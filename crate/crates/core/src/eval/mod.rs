//! Attempt records and the evaluation artifacts computed from them.

pub mod export;
pub mod metrics;
pub mod records;

pub use metrics::{
    budget_grid, cumulative_curve, split_curve, success_rate, BudgetGrid, Curve, EvalError, Rate,
};
pub use records::{
    merge_timings, read_records, records_to_string, write_records, write_timings, AttemptRecord,
    FailureStage, ProblemResult, RecordsError, RECORDS_SCHEMA_VERSION,
};
