//! Elitist genetic algorithm with uniform crossover.

use llmo_core::optimizer::seeded_stream;
use llmo_core::{Bounds, ExperimentTrace, RewardModel};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::trace::{evaluate_rows, TraceBuilder};
use crate::BaselineError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    /// Children per generation; `None` means `population`.
    pub offspring: Option<usize>,
    /// Per-gene probability of taking the first parent's gene.
    pub crossover: f64,
    /// Fraction of the population kept as parents.
    pub parent_portion: f64,
    /// Per-gene probability of a uniform resample.
    pub mutation: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 5,
            offspring: None,
            crossover: 0.5,
            parent_portion: 0.3,
            mutation: 0.1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let mut errs = Vec::new();
        if self.population == 0 {
            errs.push("population must be at least 1".to_string());
        }
        if self.offspring == Some(0) {
            errs.push("offspring must be at least 1".to_string());
        }
        for (name, p) in [
            ("crossover", self.crossover),
            ("parent_portion", self.parent_portion),
            ("mutation", self.mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                errs.push(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(BaselineError::Config(errs.join("; ")))
        }
    }

    pub fn parent_count(&self) -> usize {
        ((self.parent_portion * self.population as f64).round() as usize).clamp(1, self.population)
    }

    fn offspring_count(&self) -> usize {
        self.offspring.unwrap_or(self.population)
    }
}

/// `mask[i]` picks `first[i]`, otherwise `second[i]`.
pub fn uniform_crossover(first: &[f64], second: &[f64], mask: &[bool]) -> Vec<f64> {
    first
        .iter()
        .zip(second)
        .zip(mask)
        .map(|((&a, &b), &m)| if m { a } else { b })
        .collect()
}

/// Indices sorted by reward, best first; ties keep input order.
fn ranked(rewards: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rewards.len()).collect();
    idx.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]));
    idx
}

fn tournament<R: Rng>(rewards: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..rewards.len());
    let b = rng.random_range(0..rewards.len());
    if rewards[b] > rewards[a] {
        b
    } else {
        a
    }
}

pub fn run_ga<R: RewardModel + ?Sized>(
    config: &GaConfig,
    reward: &R,
    bounds: &Bounds,
    iterations: usize,
) -> Result<ExperimentTrace, BaselineError> {
    run_ga_from(config, reward, bounds, iterations, None)
}

/// As [`run_ga`], optionally starting from a given population instead of a uniform draw.
pub fn run_ga_from<R: RewardModel + ?Sized>(
    config: &GaConfig,
    reward: &R,
    bounds: &Bounds,
    iterations: usize,
    initial: Option<Vec<Vec<f64>>>,
) -> Result<ExperimentTrace, BaselineError> {
    config.validate()?;
    if iterations == 0 {
        return Err(BaselineError::Config("need at least one iteration".into()));
    }
    let mut rng = seeded_stream(config.seed, 0);
    let mut pop = match initial {
        Some(rows) => {
            if rows.len() != config.population {
                return Err(BaselineError::Config(format!(
                    "initial population has {} rows, expected {}",
                    rows.len(),
                    config.population
                )));
            }
            for r in &rows {
                bounds.check(r)?;
            }
            rows
        }
        None => (0..config.population)
            .map(|_| bounds.sample_uniform(&mut rng).into_values())
            .collect(),
    };
    let mut fit = evaluate_rows(reward, &pop)?;
    let mut trace = TraceBuilder::new();
    trace.push(0, &pop, &fit, (&pop, &fit), reward);

    let n_parents = config.parent_count();
    for t in 1..=iterations {
        let order = ranked(&fit);
        let parents: Vec<Vec<f64>> = order[..n_parents].iter().map(|&i| pop[i].clone()).collect();
        let parent_fit: Vec<f64> = order[..n_parents].iter().map(|&i| fit[i]).collect();

        let children: Vec<Vec<f64>> = (0..config.offspring_count())
            .map(|_| {
                let a = tournament(&parent_fit, &mut rng);
                let b = tournament(&parent_fit, &mut rng);
                let mask: Vec<bool> = (0..bounds.dim())
                    .map(|_| rng.random::<f64>() < config.crossover)
                    .collect();
                let mut child = uniform_crossover(&parents[a], &parents[b], &mask);
                for (d, gene) in child.iter_mut().enumerate() {
                    if rng.random::<f64>() < config.mutation {
                        *gene = rng.random_range(bounds.lower()[d]..=bounds.upper()[d]);
                    }
                }
                child
            })
            .collect();
        let child_fit = evaluate_rows(reward, &children)?;

        let pool: Vec<Vec<f64>> = parents.into_iter().chain(children.iter().cloned()).collect();
        let pool_fit: Vec<f64> = parent_fit.into_iter().chain(child_fit.iter().copied()).collect();
        let keep = ranked(&pool_fit);
        let keep = &keep[..config.population.min(pool.len())];
        pop = keep.iter().map(|&i| pool[i].clone()).collect();
        fit = keep.iter().map(|&i| pool_fit[i]).collect();
        trace.push(t, &children, &child_fit, (&pop, &fit), reward);
    }
    Ok(trace.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_semantics() {
        assert_eq!(
            uniform_crossover(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[true, false, true]),
            vec![1.0, 5.0, 3.0]
        );
    }

    #[test]
    fn parent_count_rounds_and_clamps() {
        let c = |population, parent_portion| GaConfig {
            population,
            parent_portion,
            ..GaConfig::default()
        };
        assert_eq!(c(5, 0.3).parent_count(), 2);
        assert_eq!(c(3, 0.3).parent_count(), 1);
        assert_eq!(c(3, 0.0).parent_count(), 1);
        assert_eq!(c(10, 1.0).parent_count(), 10);
    }

    #[test]
    fn cloning_without_mutation_keeps_the_population() {
        let config = GaConfig {
            population: 3,
            mutation: 0.0,
            ..GaConfig::default()
        };
        assert_eq!(config.parent_count(), 1);
        let r = |x: &[f64]| x[0] + x[1];
        let start = vec![vec![0.2, 0.7]; 3];
        let trace = run_ga_from(&config, &r, &Bounds::unit(2), 10, Some(start)).unwrap();
        assert_eq!(trace.best_action, vec![0.2, 0.7]);
        assert!(trace.records.iter().all(|rec| (rec.mean_reward - 0.9).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = GaConfig {
            crossover: 1.5,
            mutation: -0.1,
            ..GaConfig::default()
        };
        let e = bad.validate().unwrap_err().to_string();
        assert!(e.contains("crossover") && e.contains("mutation"), "{e}");
    }
}
