//! Experiment configuration, multi-trial execution and CSV traces.

pub mod config;
pub mod runner;
pub mod trace;

pub use config::{DatasetKind, ExperimentConfig, Mode, PartitionKind};
pub use runner::{
    load_datasets, run_experiment, run_experiment_with_data, run_trial, write_outcome, Datasets,
    ExperimentOutcome, TrialResult,
};
pub use trace::{average_trials, read_trace_csv, write_trace_csv, ExperimentTrace, TraceRow, CSV_HEADER};
