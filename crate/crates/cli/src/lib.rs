//! Config-driven experiment runner behind the `llmo` binary.
//!
//! `run` executes the configured schemes over every seed and channel
//! fixture and writes plot-ready CSVs, `analyze` fits semilog rates to a
//! finished run, and `verify-theory` runs the exact Markov-chain checks.

pub mod analyze;
pub mod config;
pub mod output;
pub mod runner;
pub mod scenario;
pub mod theory;

use thiserror::Error;

pub use analyze::{analyze_rates, fit_gap_series, RateReport};
pub use config::{ExperimentConfig, Overrides};
pub use runner::{execute, run_experiment, write_outputs, RunOptions, RunOutcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("cannot parse: {0}")]
    Parse(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("results from different configs:\n  - {}", .0.join("\n  - "))]
    MixedConfigs(Vec<String>),
    #[error("{0} carries no config hash")]
    MissingHash(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("agent setup: {0}")]
    Agent(String),
    #[error(transparent)]
    Optimizer(#[from] llmo_core::optimizer::OptimizerError),
    #[error(transparent)]
    Baseline(#[from] llmo_baselines::BaselineError),
    #[error(transparent)]
    Wireless(#[from] llmo_wireless::WirelessError),
    #[error(transparent)]
    Grid(#[from] llmo_core::grid::GridError),
    #[error(transparent)]
    Markov(#[from] llmo_core::markov::MarkovError),
}
