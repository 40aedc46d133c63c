//! The optimizer loop: sample examples, prompt, generate, evaluate, update.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentFailure, AgentRequest, Ensemble};
use crate::population::{ActionVector, Bounds, Population, PopulationError};
use crate::prompt::PromptTemplate;
use crate::reward::{RewardError, RewardModel};
use crate::trace::{ExperimentTrace, IterationRecord, PopulationDump};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error("reward evaluation failed on row {row}: {source}")]
    Reward { row: usize, source: RewardError },
    #[error("reward of row {row} is not finite")]
    NonFiniteReward { row: usize },
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Elitist,
    Lifo,
}

/// New samples plus the examples they were generated from.
///
/// Right after initialization only the new block exists.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryBuffer {
    new_block: Population,
    example_block: Option<Population>,
}

impl MemoryBuffer {
    pub fn initial(first: Population) -> Result<Self, PopulationError> {
        first.require_rewards()?;
        Ok(Self {
            new_block: first,
            example_block: None,
        })
    }

    pub fn new_block(&self) -> &Population {
        &self.new_block
    }

    pub fn example_block(&self) -> Option<&Population> {
        self.example_block.as_ref()
    }

    pub fn len(&self) -> usize {
        self.new_block.len() + self.example_block.as_ref().map_or(0, Population::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Replaces the memory with exactly the two given blocks.
pub fn update_memory(new_pop: Population, examples: Population) -> Result<MemoryBuffer, PopulationError> {
    new_pop.require_rewards()?;
    examples.require_rewards()?;
    Ok(MemoryBuffer {
        new_block: new_pop,
        example_block: Some(examples),
    })
}

/// Rows sorted by reward, best first; stable, so the new block precedes the
/// example block and lower row indices precede higher ones on ties.
fn top_rows(blocks: &[&Population], p: usize) -> Result<Population, PopulationError> {
    let mut rows: Vec<(f64, usize, usize)> = Vec::new();
    for (b, pop) in blocks.iter().enumerate() {
        for (i, &r) in pop.require_rewards()?.iter().enumerate() {
            rows.push((r, b, i));
        }
    }
    if rows.len() < p {
        return Err(PopulationError::NotEnoughRows {
            needed: p,
            available: rows.len(),
        });
    }
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    rows.truncate(p);
    let mut actions = Vec::with_capacity(p);
    let mut rewards = Vec::with_capacity(p);
    for (r, b, i) in rows {
        actions.push(blocks[b].actions()[i].clone());
        rewards.push(r);
    }
    Population::evaluated(actions, rewards)
}

/// The `p` highest-reward rows across both blocks, sorted descending.
pub fn elitist_sample(memory: &MemoryBuffer, p: usize) -> Result<Population, PopulationError> {
    let mut blocks = vec![&memory.new_block];
    if let Some(ex) = &memory.example_block {
        blocks.push(ex);
    }
    top_rows(&blocks, p)
}

/// The most recent output: verbatim when it has exactly `p` rows, else its
/// best `p` rows.
pub fn lifo_sample(memory: &MemoryBuffer, p: usize) -> Result<Population, PopulationError> {
    let new = &memory.new_block;
    new.require_rewards()?;
    if new.len() == p {
        Ok(new.clone())
    } else {
        top_rows(&[new], p)
    }
}

pub fn sample(kind: SamplerKind, memory: &MemoryBuffer, p: usize) -> Result<Population, PopulationError> {
    match kind {
        SamplerKind::Elitist => elitist_sample(memory, p),
        SamplerKind::Lifo => lifo_sample(memory, p),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRecord {
    pub action: ActionVector,
    pub reward: f64,
    pub iteration_found: usize,
}

impl BestRecord {
    pub fn from_population(pop: &Population, t: usize) -> Result<Self, PopulationError> {
        let (i, r) = pop.argmax()?;
        Ok(Self {
            action: pop.actions()[i].clone(),
            reward: r,
            iteration_found: t,
        })
    }
}

/// Replaces the incumbent only on strict improvement.
pub fn update_best(best: BestRecord, pop: &Population, t: usize) -> Result<BestRecord, PopulationError> {
    let (i, r) = pop.argmax()?;
    if best.reward < r {
        Ok(BestRecord {
            action: pop.actions()[i].clone(),
            reward: r,
            iteration_found: t,
        })
    } else {
        Ok(best)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlmoConfig {
    pub bounds: Bounds,
    /// Population size `P`.
    pub rows: usize,
    /// Iterations `T`.
    pub iterations: usize,
    pub sampler: SamplerKind,
    /// Retries after a round in which every agent failed.
    pub max_retries: usize,
    pub template: PromptTemplate,
    pub record_populations: bool,
    pub parallel_rewards: bool,
}

impl LlmoConfig {
    pub fn new(bounds: Bounds, rows: usize, iterations: usize, sampler: SamplerKind) -> Self {
        Self {
            bounds,
            rows,
            iterations,
            sampler,
            max_retries: 3,
            template: PromptTemplate::default(),
            record_populations: false,
            parallel_rewards: false,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.rows == 0 {
            return Err(OptimizerError::Config("population size must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(OptimizerError::Config("iteration count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Stream 0 drives initialization; agent `l` draws from stream `l + 1`.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn agent_streams(seed: u64, agents: usize) -> Vec<ChaCha8Rng> {
    (0..agents).map(|l| seeded_stream(seed, l as u64 + 1)).collect()
}

/// Mutable loop state between iterations.
#[derive(Clone, Debug)]
pub struct LlmoState {
    pub t: usize,
    pub examples: Population,
    pub memory: MemoryBuffer,
    pub best: BestRecord,
    pub evaluations: usize,
    rngs: Vec<ChaCha8Rng>,
}

pub struct Llmo<'a, R: RewardModel + ?Sized> {
    config: &'a LlmoConfig,
    ensemble: &'a Ensemble,
    reward: &'a R,
}

impl<'a, R: RewardModel + ?Sized> Llmo<'a, R> {
    pub fn new(config: &'a LlmoConfig, ensemble: &'a Ensemble, reward: &'a R) -> Result<Self, OptimizerError> {
        config.validate()?;
        Ok(Self {
            config,
            ensemble,
            reward,
        })
    }

    fn evaluate(&self, mut pop: Population) -> Result<Population, OptimizerError> {
        let one = |(row, a): (usize, &ActionVector)| match self.reward.evaluate(a.values()) {
            Ok(r) if r.is_finite() => Ok(r),
            Ok(_) => Err(OptimizerError::NonFiniteReward { row }),
            Err(source) => Err(OptimizerError::Reward { row, source }),
        };
        let rewards = if self.config.parallel_rewards {
            pop.actions()
                .par_iter()
                .enumerate()
                .map(one)
                .collect::<Result<Vec<_>, _>>()?
        } else {
            pop.actions()
                .iter()
                .enumerate()
                .map(one)
                .collect::<Result<Vec<_>, _>>()?
        };
        pop.set_rewards(rewards)?;
        Ok(pop)
    }

    /// Uniform initial population, evaluated, then sampled once.
    pub fn initialize(&self, seed: u64) -> Result<LlmoState, OptimizerError> {
        let mut rng = seeded_stream(seed, 0);
        let actions = (0..self.config.rows)
            .map(|_| self.config.bounds.sample_uniform(&mut rng))
            .collect();
        let first = self.evaluate(Population::new(actions)?)?;
        self.start(seed, first, true)
    }

    /// Starts the loop with `examples` as the current in-context examples,
    /// kept in the given row order.
    pub fn resume(&self, seed: u64, examples: Population) -> Result<LlmoState, OptimizerError> {
        for a in examples.actions() {
            self.config.bounds.check(a.values())?;
        }
        let first = match examples.is_evaluated() {
            true => examples,
            false => self.evaluate(examples)?,
        };
        self.start(seed, first, false)
    }

    fn start(&self, seed: u64, first: Population, resample: bool) -> Result<LlmoState, OptimizerError> {
        let evaluations = first.len();
        let best = BestRecord::from_population(&first, 0)?;
        let memory = MemoryBuffer::initial(first)?;
        let examples = match resample {
            true => sample(self.config.sampler, &memory, self.config.rows)?,
            false => memory.new_block().clone(),
        };
        Ok(LlmoState {
            t: 0,
            examples,
            memory,
            best,
            evaluations,
            rngs: agent_streams(seed, self.ensemble.len()),
        })
    }

    fn record(
        &self,
        state: &LlmoState,
        failures: usize,
        failed: bool,
        generated: Option<&Population>,
    ) -> IterationRecord {
        let ex = &state.examples;
        let violation = ex
            .actions()
            .iter()
            .map(|a| self.reward.violation(a.values()))
            .sum::<f64>()
            / ex.len() as f64;
        IterationRecord {
            t: state.t,
            best_reward: state.best.reward,
            example_best: ex.argmax().map_or(f64::NAN, |(_, r)| r),
            mean_reward: ex.mean_reward().unwrap_or(f64::NAN),
            violation,
            failures,
            failed,
            evaluations: state.evaluations,
            examples: self.config.record_populations.then(|| PopulationDump::from(ex)),
            generated: if self.config.record_populations {
                generated.map(PopulationDump::from)
            } else {
                None
            },
        }
    }

    pub fn initial_record(&self, state: &LlmoState) -> IterationRecord {
        self.record(state, 0, false, None)
    }

    /// One iteration. Agent failures are retried; when the budget runs out
    /// the examples stay as they were and the record is marked failed.
    pub fn step(&self, state: &mut LlmoState) -> Result<IterationRecord, OptimizerError> {
        state.t += 1;
        let prompt = self.ensemble.needs_prompt().then(|| {
            self.config
                .template
                .render(&state.examples, &self.config.bounds, self.config.rows)
        });
        let request = AgentRequest {
            examples: &state.examples,
            prompt: prompt.as_deref(),
            rows: self.config.rows,
            bounds: &self.config.bounds,
            format: self.config.template.format,
        };
        let mut failures = 0;
        let mut generated = None;
        for _ in 0..=self.config.max_retries {
            match self.ensemble.generate(&request, &mut state.rngs) {
                Ok(out) => {
                    failures += out.failures.len();
                    generated = Some(out.population);
                    break;
                }
                Err(AgentFailure::AllFailed) => failures += self.ensemble.len(),
                Err(e) => {
                    log::warn!("ensemble round failed: {e}");
                    failures += 1;
                }
            }
        }
        let Some(generated) = generated else {
            log::warn!("iteration {} failed after {} retries", state.t, self.config.max_retries);
            return Ok(self.record(state, failures, true, None));
        };
        let generated = self.evaluate(generated)?;
        state.evaluations += generated.len();
        state.best = update_best(state.best.clone(), &generated, state.t)?;
        state.memory = update_memory(generated.clone(), state.examples.clone())?;
        state.examples = sample(self.config.sampler, &state.memory, self.config.rows)?;
        Ok(self.record(state, failures, false, Some(&generated)))
    }

    pub fn run(&self, seed: u64) -> Result<ExperimentTrace, OptimizerError> {
        let mut state = self.initialize(seed)?;
        self.run_from(&mut state)
    }

    /// Runs the configured number of iterations from an existing state.
    pub fn run_from(&self, state: &mut LlmoState) -> Result<ExperimentTrace, OptimizerError> {
        let initial = self.initial_record(state);
        let records = (0..self.config.iterations)
            .map(|_| self.step(state))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExperimentTrace {
            initial,
            records,
            best_action: state.best.action.values().to_vec(),
            best_reward: state.best.reward,
            best_iteration: state.best.iteration_found,
        })
    }
}

pub fn run_llmo<R: RewardModel + ?Sized>(
    config: &LlmoConfig,
    ensemble: &Ensemble,
    reward: &R,
    seed: u64,
) -> Result<ExperimentTrace, OptimizerError> {
    Llmo::new(config, ensemble, reward)?.run(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop(rewards: &[f64]) -> Population {
        let b = Bounds::unit(1);
        let rows: Vec<Vec<f64>> = (0..rewards.len()).map(|i| vec![i as f64 / 100.0]).collect();
        let p = Population::from_rows(&rows, &b).unwrap();
        Population::evaluated(p.actions().to_vec(), rewards.to_vec()).unwrap()
    }

    #[test]
    fn elitist_takes_top_rows() {
        let m = update_memory(pop(&[0.5, 0.9]), pop(&[0.1, 0.7])).unwrap();
        let s = elitist_sample(&m, 2).unwrap();
        assert_eq!(s.rewards().unwrap(), &[0.9, 0.7]);
        assert_eq!(s.rows(), vec![vec![0.01], vec![0.01]]);
    }

    #[test]
    fn elitist_ties_prefer_new_block_then_index() {
        let new = pop(&[0.4, 0.4]);
        let mut old = pop(&[0.4, 0.4]);
        let b = Bounds::unit(1);
        old = Population::evaluated(
            Population::from_rows(&[vec![0.5], vec![0.6]], &b)
                .unwrap()
                .actions()
                .to_vec(),
            old.rewards().unwrap().to_vec(),
        )
        .unwrap();
        let m = update_memory(new.clone(), old).unwrap();
        assert_eq!(elitist_sample(&m, 2).unwrap().rows(), new.rows());
    }

    #[test]
    fn elitist_needs_enough_rows() {
        let m = MemoryBuffer::initial(pop(&[0.3])).unwrap();
        assert!(matches!(
            elitist_sample(&m, 2),
            Err(PopulationError::NotEnoughRows { .. })
        ));
    }

    #[test]
    fn lifo_rules() {
        let new = pop(&[0.1, 0.3]);
        let m = update_memory(new.clone(), pop(&[5.0, 6.0])).unwrap();
        assert_eq!(lifo_sample(&m, 2).unwrap(), new);
        let m = update_memory(pop(&[0.1, 0.8, 0.3, 0.9]), pop(&[5.0, 6.0])).unwrap();
        assert_eq!(lifo_sample(&m, 2).unwrap().rewards().unwrap(), &[0.9, 0.8]);
    }

    #[test]
    fn best_update_is_strict() {
        let p = pop(&[0.7]);
        let best = BestRecord::from_population(&p, 0).unwrap();
        let b = update_best(best.clone(), &pop(&[0.9]), 1).unwrap();
        assert_eq!((b.reward, b.iteration_found), (0.9, 1));
        let mut other = pop(&[0.7]);
        other = Population::evaluated(
            Population::from_rows(&[vec![0.5]], &Bounds::unit(1))
                .unwrap()
                .actions()
                .to_vec(),
            other.rewards().unwrap().to_vec(),
        )
        .unwrap();
        let same = update_best(best.clone(), &other, 1).unwrap();
        assert_eq!(same, best);
        assert_eq!(update_best(best.clone(), &pop(&[0.2]), 1).unwrap(), best);
    }

    #[test]
    fn memory_holds_two_blocks() {
        let m = update_memory(pop(&[0.1, 0.2, 0.3, 0.4]), pop(&[0.5, 0.6])).unwrap();
        assert_eq!(m.len(), 6);
        let m = update_memory(pop(&[0.9, 0.8]), pop(&[0.0, 0.0])).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m.new_block().rewards().unwrap(), &[0.9, 0.8]);
    }
}
