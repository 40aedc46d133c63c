//! Uniform random search.

use llmo_core::optimizer::seeded_stream;
use llmo_core::{Bounds, ExperimentTrace, RewardModel};

use crate::trace::{evaluate_rows, TraceBuilder};
use crate::BaselineError;

/// Draws `per_iteration` uniform actions at `t = 0..=iterations` and keeps the best.
/// Use `per_iteration = L·P` to match an optimizer with `L` agents.
pub fn brute_force<R: RewardModel + ?Sized>(
    per_iteration: usize,
    reward: &R,
    bounds: &Bounds,
    iterations: usize,
    seed: u64,
) -> Result<ExperimentTrace, BaselineError> {
    if per_iteration == 0 || iterations == 0 {
        return Err(BaselineError::Config(
            "need at least one sample and one iteration".into(),
        ));
    }
    let mut rng = seeded_stream(seed, 0);
    let mut trace = TraceBuilder::new();
    for t in 0..=iterations {
        let rows: Vec<Vec<f64>> = (0..per_iteration)
            .map(|_| bounds.sample_uniform(&mut rng).into_values())
            .collect();
        let rewards = evaluate_rows(reward, &rows)?;
        trace.push(t, &rows, &rewards, (&rows, &rewards), reward);
    }
    Ok(trace.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeatable_and_monotone() {
        let r = |x: &[f64]| -(x[0] - 0.3).powi(2);
        let b = Bounds::unit(1);
        let a = brute_force(4, &r, &b, 30, 5).unwrap();
        assert_eq!(a, brute_force(4, &r, &b, 30, 5).unwrap());
        let s = a.best_series();
        assert!(s.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.records.last().unwrap().evaluations, 4 * 31);
        assert_eq!(a.records.len(), 30);
    }
}
