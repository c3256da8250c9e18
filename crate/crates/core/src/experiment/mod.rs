//! Seeded Monte Carlo campaigns: spec files, execution, CSV output and
//! aggregate reports.

pub mod csv;
pub mod report;
pub mod runner;
pub mod spec;

pub use csv::{emit_csv, format_csv, parse_csv, read_csv, CSV_HEADER};
pub use report::{aggregate, format_report, AggregateRow, GroupKey};
pub use runner::{
    design_seed, realization_seed, run_experiment, run_experiment_detailed, run_realization, sort_records,
    splitmix64, worker_count, FdSummary, HybridSummary, RealizationOutcome, THREADS_ENV,
};
pub use spec::ExperimentSpec;
