//! Agents map in-context examples to a fresh population.
//!
//! Every agent owns nothing mutable; randomness comes from a per-agent
//! stream handed in by the caller so ensemble members stay independent.

mod http;
pub mod stub;
mod synthetic;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::Grid;
use crate::population::{Bounds, Population, PopulationError};
use crate::prompt::{NumberFormat, ParseError};

pub use http::{http_generate, HttpLlmAgent, HttpLlmAgentConfig, HttpReply};
pub use synthetic::{
    softmax_with_temperature, synthetic_generate, top_k_set, DensePolicy, LocalSearchPolicy, SyntheticAgent,
    SyntheticPolicy,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentFailure {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: usize },
    #[error("API returned status {status} after {attempts} attempt(s): {body}")]
    Api { status: u16, body: String, attempts: usize },
    #[error("unusable reply: {0}")]
    Parse(#[from] ParseError),
    #[error("credential unavailable: {0}")]
    Credential(String),
    #[error("every agent failed")]
    AllFailed,
    #[error(transparent)]
    Population(#[from] PopulationError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("no finite logit on the restricted set")]
    Degenerate,
    #[error("temperature must be positive and finite, got {0}")]
    Temperature(f64),
    #[error("restricted set is empty or out of range")]
    RestrictedSet,
    #[error("policy is not column-stochastic: {0}")]
    NotStochastic(String),
    #[error("policy shape: {0}")]
    Shape(String),
}

/// Everything an agent may look at when proposing the next population.
#[derive(Clone, Copy, Debug)]
pub struct AgentRequest<'a> {
    pub examples: &'a Population,
    /// Rendered prompt; present when some agent asked for it.
    pub prompt: Option<&'a str>,
    pub rows: usize,
    pub bounds: &'a Bounds,
    pub format: NumberFormat,
}

pub trait Agent: Send + Sync {
    fn name(&self) -> String;

    fn generate(&self, request: &AgentRequest<'_>, rng: &mut ChaCha8Rng) -> Result<Population, AgentFailure>;

    /// Whether the agent reads the rendered prompt text.
    fn needs_prompt(&self) -> bool {
        false
    }

    /// Whether calls are slow enough to be worth running on their own thread.
    fn prefers_parallel(&self) -> bool {
        false
    }
}

/// Uniform proposals over the bounds; ignores the examples.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomAgent;

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn generate(&self, request: &AgentRequest<'_>, rng: &mut ChaCha8Rng) -> Result<Population, AgentFailure> {
        let actions = (0..request.rows).map(|_| request.bounds.sample_uniform(rng)).collect();
        Ok(Population::new(actions)?)
    }
}

/// Uniform proposals restricted to grid points.
#[derive(Clone, Debug)]
pub struct GridRandomAgent {
    pub grid: Grid,
}

impl Agent for GridRandomAgent {
    fn name(&self) -> String {
        "grid-random".into()
    }

    fn generate(&self, request: &AgentRequest<'_>, rng: &mut ChaCha8Rng) -> Result<Population, AgentFailure> {
        let n = self.grid.point_count().expect("grid size fits usize");
        let actions = (0..request.rows)
            .map(|_| self.grid.point_action(rng.random_range(0..n)))
            .collect();
        Ok(Population::new(actions)?)
    }
}

/// Result of one ensemble round: concatenated output plus isolated failures.
#[derive(Debug)]
pub struct EnsembleOutput {
    pub population: Population,
    pub failures: Vec<(usize, AgentFailure)>,
}

/// `L` agents queried with the same request; outputs concatenated in agent order.
pub struct Ensemble {
    agents: Vec<Box<dyn Agent>>,
}

impl Ensemble {
    pub fn new(agents: Vec<Box<dyn Agent>>) -> Self {
        assert!(!agents.is_empty(), "ensemble needs at least one agent");
        Self { agents }
    }

    pub fn single(agent: impl Agent + 'static) -> Self {
        Self::new(vec![Box::new(agent)])
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Box<dyn Agent>] {
        &self.agents
    }

    pub fn needs_prompt(&self) -> bool {
        self.agents.iter().any(|a| a.needs_prompt())
    }

    /// Queries every agent, each with its own stream from `rngs`.
    ///
    /// Calls run on scoped threads when any agent prefers it; results are
    /// joined before returning, so ordering never depends on timing.
    pub fn generate(
        &self,
        request: &AgentRequest<'_>,
        rngs: &mut [ChaCha8Rng],
    ) -> Result<EnsembleOutput, AgentFailure> {
        assert_eq!(rngs.len(), self.agents.len(), "one stream per agent");
        let parallel = self.agents.len() > 1 && self.agents.iter().any(|a| a.prefers_parallel());
        let results: Vec<Result<Population, AgentFailure>> = if parallel {
            std::thread::scope(|scope| {
                let handles: Vec<_> = self
                    .agents
                    .iter()
                    .zip(rngs.iter_mut())
                    .map(|(agent, rng)| scope.spawn(move || agent.generate(request, rng)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("agent thread panicked"))
                    .collect()
            })
        } else {
            self.agents
                .iter()
                .zip(rngs.iter_mut())
                .map(|(agent, rng)| agent.generate(request, rng))
                .collect()
        };
        let mut parts = Vec::new();
        let mut failures = Vec::new();
        for (l, r) in results.into_iter().enumerate() {
            match r {
                Ok(pop) => parts.push(pop),
                Err(e) => {
                    log::warn!("agent {l} ({}) failed: {e}", self.agents[l].name());
                    failures.push((l, e));
                }
            }
        }
        if parts.is_empty() {
            return Err(AgentFailure::AllFailed);
        }
        Ok(EnsembleOutput {
            population: Population::concat(&parts)?,
            failures,
        })
    }
}

/// Free-function form of [`Ensemble::generate`].
pub fn ensemble_generate(
    ensemble: &Ensemble,
    request: &AgentRequest<'_>,
    rngs: &mut [ChaCha8Rng],
) -> Result<EnsembleOutput, AgentFailure> {
    ensemble.generate(request, rngs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    struct Failing;

    impl Agent for Failing {
        fn name(&self) -> String {
            "failing".into()
        }

        fn generate(&self, _: &AgentRequest<'_>, _: &mut ChaCha8Rng) -> Result<Population, AgentFailure> {
            Err(AgentFailure::Transport {
                message: "down".into(),
                attempts: 1,
            })
        }
    }

    fn request<'a>(examples: &'a Population, bounds: &'a Bounds) -> AgentRequest<'a> {
        AgentRequest {
            examples,
            prompt: None,
            rows: 2,
            bounds,
            format: NumberFormat::default(),
        }
    }

    #[test]
    fn failures_are_isolated() {
        let b = Bounds::unit(2);
        let ex = Population::from_rows(&[vec![0.1, 0.1], vec![0.2, 0.2]], &b).unwrap();
        let ens = Ensemble::new(vec![Box::new(Failing), Box::new(RandomAgent)]);
        let mut rngs = vec![ChaCha8Rng::seed_from_u64(1), ChaCha8Rng::seed_from_u64(2)];
        let out = ens.generate(&request(&ex, &b), &mut rngs).unwrap();
        assert_eq!(out.population.len(), 2);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].0, 0);

        let ens = Ensemble::new(vec![Box::new(Failing), Box::new(Failing)]);
        assert_eq!(
            ens.generate(&request(&ex, &b), &mut rngs).unwrap_err(),
            AgentFailure::AllFailed
        );
    }

    #[test]
    fn random_agent_stays_in_bounds() {
        let b = Bounds::uniform(3, -1.0, 2.0).unwrap();
        let ex = Population::from_rows(&[vec![0.0; 3]], &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let pop = RandomAgent.generate(&request(&ex, &b), &mut rng).unwrap();
            for a in pop.actions() {
                b.check(a.values()).unwrap();
            }
        }
    }
}
