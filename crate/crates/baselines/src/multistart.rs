//! Best-of-n restarts from uniform initial points.

use llmo_core::optimizer::seeded_stream;
use llmo_core::Bounds;
use rayon::prelude::*;

use crate::fp::FpResult;
use crate::wmmse::WmmseResult;
use crate::BaselineError;

/// Objective value a restart is ranked by.
pub trait Scored {
    fn score(&self) -> f64;
}

impl Scored for WmmseResult {
    fn score(&self) -> f64 {
        self.se
    }
}

impl Scored for FpResult {
    fn score(&self) -> f64 {
        self.ee
    }
}

impl Scored for (Vec<f64>, f64) {
    fn score(&self) -> f64 {
        self.1
    }
}

#[derive(Clone, Debug)]
pub struct MultiStartResult<T> {
    /// Index of the first start attaining the best score.
    pub best_index: usize,
    pub runs: Vec<T>,
}

impl<T: Scored> MultiStartResult<T> {
    pub fn best(&self) -> &T {
        &self.runs[self.best_index]
    }
}

/// Initial point of start `i`; the same for every `n > i`, so results are
/// non-decreasing in `n` for a fixed seed.
pub fn start_point(bounds: &Bounds, seed: u64, i: usize) -> Vec<f64> {
    bounds.sample_uniform(&mut seeded_stream(seed, i as u64)).into_values()
}

/// Runs `optimizer` from `n_starts` uniform initial points concurrently.
pub fn multi_start<T, F>(
    optimizer: F,
    bounds: &Bounds,
    n_starts: usize,
    seed: u64,
) -> Result<MultiStartResult<T>, BaselineError>
where
    T: Scored + Send,
    F: Fn(&[f64]) -> Result<T, BaselineError> + Sync,
{
    if n_starts == 0 {
        return Err(BaselineError::Config("need at least one start".into()));
    }
    let runs = (0..n_starts)
        .into_par_iter()
        .map(|i| optimizer(&start_point(bounds, seed, i)))
        .collect::<Result<Vec<T>, _>>()?;
    let mut best_index = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.score() > runs[best_index].score() {
            best_index = i;
        }
    }
    Ok(MultiStartResult { best_index, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_start_is_a_single_run() {
        let b = Bounds::unit(2);
        let f = |x: &[f64]| Ok((x.to_vec(), x[0] - x[1]));
        let m = multi_start(f, &b, 1, 4).unwrap();
        let direct = f(&start_point(&b, 4, 0)).unwrap();
        assert_eq!(*m.best(), direct);
    }

    #[test]
    fn nested_seeds_never_get_worse() {
        let b = Bounds::unit(1);
        let f = |x: &[f64]| Ok((x.to_vec(), (x[0] * 17.0).sin()));
        let mut last = f64::NEG_INFINITY;
        for n in 1..30 {
            let s = multi_start(f, &b, n, 9).unwrap().best().1;
            assert!(s >= last);
            last = s;
        }
    }
}
