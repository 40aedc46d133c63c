//! Empirical check of the chain against real optimizer trajectories.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{Agent, DensePolicy, Ensemble, SyntheticAgent};
use crate::optimizer::{seeded_stream, Llmo, LlmoConfig, SamplerKind};
use crate::scalar::Scalar;

use super::{propagate, MarkovError, StateSpace, TransitionModel};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub runs: usize,
    pub steps: usize,
    /// Largest `|empirical − π|` over all steps and states.
    pub max_deviation: f64,
    /// Largest deviation in units of the binomial standard deviation.
    pub max_z: f64,
    /// `(t, rank)` cells outside the `z_limit` band.
    pub violations: Vec<(usize, usize)>,
    /// Cells compared, i.e. `(steps + 1) · |S|`.
    pub cells: usize,
    pub z_limit: f64,
}

impl DivergenceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn per_trajectory_seed(seed: u64, run: usize) -> u64 {
    seed.wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs `runs` optimizer trajectories with dense synthetic agents built
/// from `policies`, starting from `s0 ~ pi0`, and compares the occupancy of
/// the in-context example state at `t = 0..=steps` with `model`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_validate<T: Scalar>(
    space: &StateSpace,
    model: &TransitionModel<T>,
    policies: &[Arc<DensePolicy<f64>>],
    sampler: SamplerKind,
    pi0: &[T],
    runs: usize,
    steps: usize,
    seed: u64,
) -> Result<DivergenceReport, MarkovError> {
    let n = space.len();
    let expected = propagate(model, pi0, steps)?;
    let agents: Vec<Box<dyn Agent>> = policies
        .iter()
        .map(|p| Box::new(SyntheticAgent::dense(space.grid().clone(), p.clone())) as Box<dyn Agent>)
        .collect();
    let ensemble = Ensemble::new(agents);
    let mut config = LlmoConfig::new(space.grid().bounds().clone(), space.rows(), steps.max(1), sampler);
    config.max_retries = 0;
    let table = space.table();
    let llmo = Llmo::new(&config, &ensemble, table).map_err(|e| MarkovError::Shape(e.to_string()))?;

    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &p in pi0 {
        acc += p.as_f64();
        cdf.push(acc);
    }

    let counts = (0..runs)
        .into_par_iter()
        .try_fold(
            || vec![0u64; (steps + 1) * n],
            |mut counts, run| -> Result<Vec<u64>, MarkovError> {
                let s = per_trajectory_seed(seed, run);
                let mut rng = seeded_stream(s, 0);
                let u = rng.random::<f64>() * acc;
                let start = cdf.partition_point(|&c| c <= u).min(n - 1);
                let mut state = llmo
                    .resume(s, space.decode(start))
                    .map_err(|e| MarkovError::Shape(e.to_string()))?;
                counts[start] += 1;
                for t in 1..=steps {
                    llmo.step(&mut state).map_err(|e| MarkovError::Shape(e.to_string()))?;
                    counts[t * n + space.rank_of_population(&state.examples)?] += 1;
                }
                Ok(counts)
            },
        )
        .try_reduce(
            || vec![0u64; (steps + 1) * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;

    let z_limit = 3.0;
    let mut max_deviation: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut violations = Vec::new();
    for t in 0..=steps {
        for i in 0..n {
            let p = expected.distributions[t][i].as_f64().clamp(0.0, 1.0);
            let emp = counts[t * n + i] as f64 / runs as f64;
            let dev = (emp - p).abs();
            max_deviation = max_deviation.max(dev);
            let sigma = (p * (1.0 - p) / runs as f64).sqrt();
            let outside = if sigma > 0.0 {
                let z = dev / sigma;
                max_z = max_z.max(z);
                z > z_limit
            } else {
                dev > 1e-12
            };
            if outside {
                violations.push((t, i));
            }
        }
    }
    Ok(DivergenceReport {
        runs,
        steps,
        max_deviation,
        max_z,
        violations,
        cells: (steps + 1) * n,
        z_limit,
    })
}
