//! Experiment harness for the hybrid iLQR benchmarks.
//!
//! An experiment is a TOML file ([`ExperimentConfig`]) naming a benchmark
//! system, the optimal control problem, a seed policy and the gradient
//! variants to compare. [`run_experiment`] solves it once per variant and
//! returns one [`RunRecord`] each; [`table`] turns records into a bounce
//! count table and [`dump`] writes trajectories as CSV.

pub mod config;
pub mod dump;
pub mod io;
pub mod record;
pub mod runner;
pub mod seeds;
pub mod table;

pub use config::{CostConfig, ExperimentConfig, Overrides, ProblemConfig, TableLabels};
pub use record::{EventRecord, RunRecord, RunStatus, TrajectoryData};
pub use runner::{build_cost, load_suite, run_experiment, run_suite};
pub use seeds::SeedPolicy;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("seed construction failed: {0}")]
    Seed(String),
}
