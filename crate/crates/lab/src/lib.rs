//! Experiment harness: configured runs, persisted trajectories, bound checks, slope sweeps
//! and re-verification of stored results.

pub mod config;
pub mod engine;
pub mod error;
pub mod harness;
pub mod output;

pub use config::{Algorithm, Overrides, RunConfig};
pub use engine::{execute, prepare, summarize, Prepared, Row, Summary};
pub use error::{LabError, Result};
pub use harness::{
    fit_slope, list_scenarios, report, run, run_in_memory, sweep, sweep_slope, Metric,
    ReportOutcome, RunOutcome, SlopeFit, SweepOutcome,
};
