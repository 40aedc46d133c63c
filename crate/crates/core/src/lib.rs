//! LLM-optimizer loop, prompt codec, agents and exact Markov-chain analysis
//! on quantized action grids.
//!
//! The analysis types are generic over [`Scalar`]; the aliases below fix
//! them to `f64`, which is what the rest of the workspace uses.

pub mod agents;
pub mod grid;
pub mod markov;
pub mod matrix;
pub mod optimizer;
pub mod population;
pub mod prompt;
pub mod reward;
pub mod scalar;
pub mod stats;
pub mod theory;
pub mod token;
pub mod trace;

pub use agents::{Agent, AgentFailure, AgentRequest, Ensemble};
pub use grid::{grid_reward_table, Grid, GridRewardTable};
pub use optimizer::{
    elitist_sample, lifo_sample, run_llmo, update_best, update_memory, BestRecord, Llmo, LlmoConfig, MemoryBuffer,
    SamplerKind,
};
pub use population::{ActionVector, Bounds, Population, PopulationError};
pub use prompt::{parse_population, render_prompt, NumberFormat, PromptTemplate};
pub use reward::{RewardError, RewardModel};
pub use scalar::Scalar;
pub use token::{state_space_size, tokenize_number, TokenModel};
pub use trace::{ExperimentTrace, IterationRecord};

pub type Matrix = matrix::DenseMatrix<f64>;
pub type DensePolicy = agents::DensePolicy<f64>;
pub type TransitionModel = markov::TransitionModel<f64>;
pub type EigenInit = markov::EigenInit<f64>;
pub type Propagation = markov::Propagation<f64>;
