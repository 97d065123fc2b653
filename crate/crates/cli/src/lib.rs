//! Monte Carlo benchmark harness for `doalab-core`.

pub mod config;
pub mod demo;
pub mod error;
pub mod report;
pub mod sweep;

pub use config::{SweepParameter, SweepSpec};
pub use error::CliError;
pub use report::{emit_csv, read_csv, ResultRow};
pub use sweep::{run_sweep, MethodOutcome, RunOptions, SweepOutput, TrialRecord};
