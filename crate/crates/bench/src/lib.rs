//! Experiment harness around `ibmi-core`: JSON experiment specs in, CSV rows out.

pub mod error;
pub mod experiment;

pub use error::{BenchError, Result};
pub use experiment::{
    compare_direct, emit_csv, load_specs, read_csv, run_experiment, run_experiment_with,
    write_csv, ExperimentRow, ExperimentSpec, RowStatus, RunOptions, DEFAULT_MEMORY_BUDGET,
};
