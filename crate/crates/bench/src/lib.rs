//! Monte Carlo harness for the coordinated-turn smoothing experiment.
//!
//! Simulates ground truth in binary64, runs the iterated smoother for each
//! (method, precision) cell, records per-step error norms and writes them as
//! CSV together with per-step means.

pub mod aggregate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use aggregate::{aggregate, Aggregates, CellFailures, MeanRow};
pub use config::{ExperimentConfig, Method, Precision, RuleSpec};
pub use error::BenchError;
pub use experiment::{run_experiment, Status, TrialRecord};
pub use io::{emit_csv, format_f64, mean_path, read_records, write_aggregates, write_records};
