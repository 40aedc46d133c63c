//! Batch Bayesian optimization with a random-forest surrogate and expected improvement.

use llmo_core::optimizer::seeded_stream;
use llmo_core::{Bounds, ExperimentTrace, RewardModel};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::forest::RandomForest;
use crate::trace::{evaluate_rows, TraceBuilder};
use crate::BaselineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateKind {
    RandomForest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoConfig {
    pub surrogate: SurrogateKind,
    /// Proposals per iteration.
    pub batch: usize,
    pub trees: usize,
    pub max_depth: usize,
    /// Uniform candidates scored by EI each iteration.
    pub pool: usize,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            surrogate: SurrogateKind::RandomForest,
            batch: 5,
            trees: 32,
            max_depth: 6,
            pool: 1000,
            seed: 0,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let mut errs = Vec::new();
        if self.batch == 0 {
            errs.push("batch must be at least 1");
        }
        if self.trees == 0 {
            errs.push("trees must be at least 1");
        }
        if self.pool < self.batch {
            errs.push("pool must hold at least one batch");
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(BaselineError::Config(errs.join("; ")))
        }
    }
}

/// `EI = (μ − f*) Φ(z) + σ φ(z)` with `z = (μ − f*)/σ`; `max(μ − f*, 0)` when `σ = 0`.
pub fn expected_improvement(mean: f64, std: f64, incumbent: f64) -> f64 {
    let gain = mean - incumbent;
    if std <= 0.0 {
        return gain.max(0.0);
    }
    let n = Normal::standard();
    let z = gain / std;
    (gain * n.cdf(z) + std * n.pdf(z)).max(0.0)
}

/// The batch at `t = 0` is uniform, as is any batch proposed while all
/// observed rewards are equal; other batches are the top-EI points of a
/// uniform candidate pool.
pub fn run_bo<R: RewardModel + ?Sized>(
    config: &BoConfig,
    reward: &R,
    bounds: &Bounds,
    iterations: usize,
) -> Result<ExperimentTrace, BaselineError> {
    config.validate()?;
    if iterations == 0 {
        return Err(BaselineError::Config("need at least one iteration".into()));
    }
    let mut rng = seeded_stream(config.seed, 0);
    let mut xs: Vec<Vec<f64>> = (0..config.batch)
        .map(|_| bounds.sample_uniform(&mut rng).into_values())
        .collect();
    let mut ys = evaluate_rows(reward, &xs)?;
    let mut trace = TraceBuilder::new();
    trace.push(0, &xs, &ys, (&xs, &ys), reward);
    for t in 1..=iterations {
        let degenerate = ys.iter().all(|&y| y == ys[0]);
        let batch: Vec<Vec<f64>> = if degenerate {
            (0..config.batch)
                .map(|_| bounds.sample_uniform(&mut rng).into_values())
                .collect()
        } else {
            let forest = RandomForest::fit(&xs, &ys, config.trees, config.max_depth, &mut rng);
            let incumbent = trace.best_reward();
            let pool: Vec<Vec<f64>> = (0..config.pool)
                .map(|_| bounds.sample_uniform(&mut rng).into_values())
                .collect();
            let ei: Vec<f64> = pool
                .iter()
                .map(|x| {
                    let (m, s) = forest.predict(x);
                    expected_improvement(m, s, incumbent)
                })
                .collect();
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.sort_by(|&a, &b| ei[b].total_cmp(&ei[a]));
            order[..config.batch].iter().map(|&i| pool[i].clone()).collect()
        };
        let rewards = evaluate_rows(reward, &batch)?;
        xs.extend(batch.iter().cloned());
        ys.extend(&rewards);
        trace.push(t, &batch, &rewards, (&batch, &rewards), reward);
    }
    Ok(trace.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_zero_variance_below_incumbent() {
        assert_eq!(expected_improvement(0.5, 0.0, 1.0), 0.0);
        assert_eq!(expected_improvement(1.5, 0.0, 1.0), 0.5);
    }

    #[test]
    fn ei_at_incumbent_is_sigma_over_root_two_pi() {
        let ei = expected_improvement(1.0, 2.0, 1.0);
        assert!((ei - 2.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn first_batch_is_uniform() {
        let config = BoConfig {
            batch: 4,
            seed: 3,
            ..BoConfig::default()
        };
        let b = Bounds::new(vec![0.0, -2.0], vec![1.0, 2.0]).unwrap();
        let trace = run_bo(&config, &|x: &[f64]| x[0], &b, 1).unwrap();
        let mut rng = seeded_stream(3, 0);
        let expected: Vec<Vec<f64>> = (0..4).map(|_| b.sample_uniform(&mut rng).into_values()).collect();
        let best = expected.iter().map(|x| x[0]).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(trace.initial.best_reward, best);
        assert_eq!(trace.initial.evaluations, 4);
        assert_eq!(trace.records[0].evaluations, 8);
    }

    #[test]
    fn constant_reward_falls_back_to_uniform() {
        let trace = run_bo(&BoConfig::default(), &|_: &[f64]| 1.0, &Bounds::unit(2), 5).unwrap();
        assert_eq!(trace.best_reward, 1.0);
        assert_eq!(trace.records.last().unwrap().evaluations, 30);
    }
}
