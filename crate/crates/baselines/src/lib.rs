//! Classical comparators for the optimizer: genetic algorithm, Bayesian
//! optimization, uniform random search, WMMSE and Dinkelbach power control,
//! and a multi-start wrapper.
//!
//! The black-box schemes return the optimizer's [`ExperimentTrace`] so all
//! curves share one CSV layout and record cumulative reward evaluations.

mod bo;
mod brute;
mod forest;
mod fp;
mod ga;
mod multistart;
mod power;
mod trace;
mod wmmse;

use llmo_core::{PopulationError, RewardError};
use thiserror::Error;

pub use bo::{expected_improvement, run_bo, BoConfig, SurrogateKind};
pub use brute::brute_force;
pub use forest::{RandomForest, RegressionTree};
pub use fp::{dinkelbach_ee, FpResult, SILENT_START};
pub use ga::{run_ga, run_ga_from, uniform_crossover, GaConfig};
pub use llmo_core::ExperimentTrace;
pub use multistart::{multi_start, start_point, MultiStartResult, Scored};
pub use power::{PowerConstraint, PowerControlProblem};
pub use wmmse::{wmmse, WmmseResult, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("reward failed on row {row}: {source}")]
    Reward { row: usize, source: RewardError },
    #[error("reward of row {row} is not finite")]
    NonFinite { row: usize },
    #[error(transparent)]
    Population(#[from] PopulationError),
}
