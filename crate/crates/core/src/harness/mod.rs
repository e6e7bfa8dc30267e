//! Replicated experiments: configuration, orchestration with common random
//! numbers, and CSV output.

mod config;
mod output;
mod run;

pub use config::{parse_algorithm_list, parse_config, ExperimentConfig, PenaltySchedule, ProblemKind};
pub use output::{
    emit_aggregate_csv, emit_convergence_series, emit_replicate_csv, read_replicate_csv,
    AGGREGATE_FILE, REPLICATES_FILE, RUN_LOG_FILE, SERIES_ERROR_FILE, SERIES_PROPORTION_FILE,
};
pub use run::{
    run_algorithm, run_experiment, run_replicates, ExperimentResult, ReplicateFailure,
    RetainedTrace,
};
