//! Exact finite-state analysis of the optimizer on a quantized grid.
//!
//! The chain's state is the in-context example population. States are
//! ranked best first (see [`StateSpace`]); every matrix is indexed by rank.

mod analysis;
mod montecarlo;
mod space;
mod transition;

use thiserror::Error;

use crate::grid::GridError;

pub use analysis::{
    acr_from_gaps, acr_series, expected_best_reward, expected_gap, propagate, q_max_and_eigen_init,
    stationary_distribution, verify_rate_laws, EigenInit, Propagation, RateReport,
};
pub use montecarlo::{monte_carlo_validate, DivergenceReport};
pub use space::{enumerate_and_order, StateSpace};
pub use transition::{
    build_ensemble_transition, build_multi_transition, build_single_transition, check_structure, Blocks, Construction,
    StructureReport, TransitionModel,
};

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("{count} states or work items exceed the cap of {cap}")]
    Capacity { count: u128, cap: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("not stochastic: {0}")]
    NotStochastic(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("model is not elitist: the non-optimal block is not upper triangular")]
    NotElitist,
}
