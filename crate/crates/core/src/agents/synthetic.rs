//! Synthetic agents with an exactly known transition law on a grid.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentError, AgentFailure, AgentRequest};
use crate::grid::Grid;
use crate::matrix::DenseMatrix;
use crate::population::Population;
use crate::scalar::Scalar;

/// Softmax of `logits / alpha` over `restricted`, zero elsewhere.
pub fn softmax_with_temperature<T: Scalar>(logits: &[T], alpha: T, restricted: &[usize]) -> Result<Vec<T>, AgentError> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(AgentError::Temperature(alpha.as_f64()));
    }
    if restricted.is_empty() || restricted.iter().any(|&i| i >= logits.len()) {
        return Err(AgentError::RestrictedSet);
    }
    let peak = restricted.iter().map(|&i| logits[i]).fold(T::neg_infinity(), T::max);
    if !peak.is_finite() {
        return Err(AgentError::Degenerate);
    }
    let mut out = vec![T::zero(); logits.len()];
    for &i in restricted {
        out[i] = ((logits[i] - peak) / alpha).exp();
    }
    let total: T = out.iter().copied().sum();
    for v in &mut out {
        *v = *v / total;
    }
    Ok(out)
}

/// Indices of the `k` largest logits, ascending; earlier indices win ties.
pub fn top_k_set<T: Scalar>(logits: &[T], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..logits.len()).collect();
    idx.sort_by(|&a, &b| {
        logits[b]
            .partial_cmp(&logits[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k.min(logits.len()));
    idx.sort_unstable();
    idx
}

/// Column-stochastic `λ[next][current]` over raw grid-state indices.
#[derive(Clone, Debug)]
pub struct DensePolicy<T: Scalar> {
    lambda: DenseMatrix<T>,
    cdf: Vec<Vec<f64>>,
}

impl<T: Scalar> DensePolicy<T> {
    pub fn from_matrix(lambda: DenseMatrix<T>) -> Result<Self, AgentError> {
        if !lambda.is_square() {
            return Err(AgentError::Shape(format!(
                "{}x{} is not square",
                lambda.rows(),
                lambda.cols()
            )));
        }
        for j in 0..lambda.cols() {
            if lambda.column(j).iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
                return Err(AgentError::NotStochastic(format!(
                    "column {j} has a negative or non-finite entry"
                )));
            }
        }
        if !lambda.is_column_stochastic(T::STOCHASTIC_TOL) {
            return Err(AgentError::NotStochastic("a column does not sum to one".into()));
        }
        let cdf = (0..lambda.cols())
            .map(|j| {
                let mut acc = 0.0;
                lambda
                    .column(j)
                    .iter()
                    .map(|&v| {
                        acc += v.as_f64();
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self { lambda, cdf })
    }

    /// Column `j` is the softmax of logit column `j`, optionally restricted
    /// to its `top_k` largest entries.
    pub fn from_logits(logits: &DenseMatrix<T>, alpha: T, top_k: Option<usize>) -> Result<Self, AgentError> {
        let n = logits.rows();
        let columns = (0..logits.cols())
            .map(|j| {
                let col = logits.column(j);
                let set = match top_k {
                    Some(k) => top_k_set(col, k),
                    None => (0..n).collect(),
                };
                softmax_with_temperature(col, alpha, &set)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_matrix(DenseMatrix::from_columns(&columns))
    }

    pub fn uniform(states: usize) -> Self {
        let p = T::one() / T::of(states as f64);
        Self::from_matrix(DenseMatrix::from_columns(&vec![vec![p; states]; states])).expect("uniform is stochastic")
    }

    /// Every state moves to `target`.
    pub fn delta(states: usize, target: usize) -> Self {
        let mut col = vec![T::zero(); states];
        col[target] = T::one();
        Self::from_matrix(DenseMatrix::from_columns(&vec![col; states])).expect("delta is stochastic")
    }

    pub fn states(&self) -> usize {
        self.lambda.rows()
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.lambda
    }

    pub fn probability(&self, next: usize, current: usize) -> T {
        self.lambda.get(next, current)
    }

    pub fn sample<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> usize {
        let cdf = &self.cdf[current];
        let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
        let i = cdf.partition_point(|&c| c <= u);
        // skip zero-probability tails produced by rounding
        let mut i = i.min(cdf.len() - 1);
        while i > 0 && self.lambda.get(i, current) == T::zero() {
            i -= 1;
        }
        i
    }
}

/// Factorized exploring agent: each output row independently is a uniform
/// grid point with probability `epsilon`, otherwise a uniformly chosen
/// example row moved by up to `radius` levels per dimension (clamped).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSearchPolicy {
    pub grid: Grid,
    pub epsilon: f64,
    pub radius: usize,
}

impl LocalSearchPolicy {
    pub fn new(grid: Grid, epsilon: f64, radius: usize) -> Result<Self, AgentError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(AgentError::Shape(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(Self { grid, epsilon, radius })
    }

    pub fn sample_row<R: Rng + ?Sized>(&self, example_points: &[usize], rng: &mut R) -> usize {
        let g = self.grid.levels();
        if rng.random::<f64>() < self.epsilon {
            return rng.random_range(0..self.grid.point_count().expect("grid size fits usize"));
        }
        let base = example_points[rng.random_range(0..example_points.len())];
        let r = self.radius as i64;
        let levels: Vec<usize> = self
            .grid
            .point_levels(base)
            .into_iter()
            .map(|l| {
                let offset = rng.random_range(0..=2 * r) - r;
                (l as i64 + offset).clamp(0, g as i64 - 1) as usize
            })
            .collect();
        self.grid.point_index(&levels)
    }

    fn move_probability(&self, from: usize, to: usize) -> f64 {
        let g = self.grid.levels() as i64;
        let r = self.radius as i64;
        let hits = (-r..=r)
            .filter(|o| (from as i64 + o).clamp(0, g - 1) == to as i64)
            .count();
        hits as f64 / (2 * r + 1) as f64
    }

    /// Exact law of one output row given the example points.
    pub fn row_distribution(&self, example_points: &[usize]) -> Vec<f64> {
        let n = self.grid.point_count().expect("grid size fits usize");
        let from: Vec<Vec<usize>> = example_points.iter().map(|&p| self.grid.point_levels(p)).collect();
        (0..n)
            .map(|q| {
                let to = self.grid.point_levels(q);
                let local: f64 = from
                    .iter()
                    .map(|f| {
                        f.iter()
                            .zip(&to)
                            .map(|(&a, &b)| self.move_probability(a, b))
                            .product::<f64>()
                    })
                    .sum::<f64>()
                    / from.len() as f64;
                self.epsilon / n as f64 + (1.0 - self.epsilon) * local
            })
            .collect()
    }

    /// Dense `λ` over populations of `rows` points.
    pub fn to_dense(&self, rows: usize) -> Result<DensePolicy<f64>, AgentError> {
        let states = self
            .grid
            .state_count(rows)
            .ok_or_else(|| AgentError::Shape("state space overflows".into()))?;
        let columns: Vec<Vec<f64>> = (0..states)
            .map(|s| {
                let row = self.row_distribution(&self.grid.state_rows(s, rows));
                (0..states)
                    .map(|x| self.grid.state_rows(x, rows).iter().map(|&q| row[q]).product())
                    .collect()
            })
            .collect();
        DensePolicy::from_matrix(DenseMatrix::from_columns(&columns))
    }
}

#[derive(Clone, Debug)]
pub enum SyntheticPolicy {
    Dense(Arc<DensePolicy<f64>>),
    LocalSearch(LocalSearchPolicy),
}

/// Grid agent whose proposal law is known exactly.
#[derive(Clone, Debug)]
pub struct SyntheticAgent {
    grid: Grid,
    policy: SyntheticPolicy,
    label: String,
}

impl SyntheticAgent {
    pub fn dense(grid: Grid, policy: impl Into<Arc<DensePolicy<f64>>>) -> Self {
        Self {
            grid,
            policy: SyntheticPolicy::Dense(policy.into()),
            label: "synthetic-dense".into(),
        }
    }

    pub fn local_search(policy: LocalSearchPolicy) -> Self {
        Self {
            grid: policy.grid.clone(),
            policy: SyntheticPolicy::LocalSearch(policy),
            label: "synthetic-local".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn policy(&self) -> &SyntheticPolicy {
        &self.policy
    }

    /// Samples a successor of the raw grid state `current` (populations of `rows` points).
    pub fn generate_from_state<R: Rng + ?Sized>(&self, current: usize, rows: usize, rng: &mut R) -> Population {
        match &self.policy {
            SyntheticPolicy::Dense(p) => self.grid.decode_state(p.sample(current, rng), rows),
            SyntheticPolicy::LocalSearch(p) => {
                let points = self.grid.state_rows(current, rows);
                let out: Vec<usize> = (0..rows).map(|_| p.sample_row(&points, rng)).collect();
                self.grid.decode_state(self.grid.state_index(&out), rows)
            }
        }
    }
}

/// Free-function form of [`SyntheticAgent::generate_from_state`].
pub fn synthetic_generate<R: Rng + ?Sized>(
    agent: &SyntheticAgent,
    current_state: usize,
    rows: usize,
    rng: &mut R,
) -> Population {
    agent.generate_from_state(current_state, rows, rng)
}

impl Agent for SyntheticAgent {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn generate(&self, request: &AgentRequest<'_>, rng: &mut ChaCha8Rng) -> Result<Population, AgentFailure> {
        match &self.policy {
            SyntheticPolicy::Dense(p) => {
                let current = self
                    .grid
                    .encode_population(request.examples)
                    .map_err(|e| AgentFailure::Transport {
                        message: e.to_string(),
                        attempts: 1,
                    })?;
                if current >= p.states() || request.examples.len() != request.rows {
                    return Err(AgentFailure::Population(
                        crate::population::PopulationError::NotEnoughRows {
                            needed: request.rows,
                            available: request.examples.len(),
                        },
                    ));
                }
                Ok(self.generate_from_state(current, request.rows, rng))
            }
            SyntheticPolicy::LocalSearch(p) => {
                let points: Vec<usize> = request
                    .examples
                    .actions()
                    .iter()
                    .map(|a| self.grid.snap_point(a.values()))
                    .collect();
                let out: Vec<usize> = (0..request.rows).map(|_| p.sample_row(&points, rng)).collect();
                Ok(Population::new(
                    out.into_iter().map(|q| self.grid.point_action(q)).collect(),
                )?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::Bounds;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    #[test]
    fn softmax_examples() {
        let p = softmax_with_temperature(&[1.0, 1.0], 0.7, &[0, 1]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        let p = softmax_with_temperature(&[2.0, 0.0], 1.0, &[0, 1]).unwrap();
        let e2 = 2f64.exp();
        assert_abs_diff_eq!(p[0], e2 / (e2 + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 1.0 / (e2 + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.8808, epsilon = 1e-4);
        let p = softmax_with_temperature(&[2.0, 0.0], 1e6, &[0, 1]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-5);
    }

    #[test]
    fn softmax_restriction_and_errors() {
        let p = softmax_with_temperature(&[3.0, 1.0, 2.0], 1.0, &[1, 2]).unwrap();
        assert_eq!(p[0], 0.0);
        assert_abs_diff_eq!(p[1] + p[2], 1.0, epsilon = 1e-15);
        let ninf = f64::NEG_INFINITY;
        assert_eq!(
            softmax_with_temperature(&[ninf, ninf, 0.0], 1.0, &[0, 1]),
            Err(AgentError::Degenerate)
        );
        assert!(softmax_with_temperature(&[0.0], 0.0, &[0]).is_err());
        assert!(softmax_with_temperature(&[0.0], 1.0, &[]).is_err());
        let p32 = softmax_with_temperature(&[2.0f32, 0.0], 1.0, &[0, 1]).unwrap();
        assert!((p32[0] - 0.880797).abs() < 1e-5);
    }

    #[test]
    fn top_k_keeps_largest() {
        assert_eq!(top_k_set(&[0.1, 3.0, 2.0, 3.0], 2), vec![1, 3]);
        assert_eq!(top_k_set(&[0.1, 3.0], 5), vec![0, 1]);
    }

    #[test]
    fn delta_policy_always_hits_target() {
        let grid = Grid::new(4, Bounds::unit(1)).unwrap();
        let agent = SyntheticAgent::dense(grid.clone(), DensePolicy::delta(16, 9));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in 0..16 {
            let pop = agent.generate_from_state(s, 2, &mut rng);
            assert_eq!(pop.rows(), grid.decode_state(9, 2).rows());
        }
    }

    #[test]
    fn uniform_policy_frequencies() {
        let grid = Grid::new(2, Bounds::unit(1)).unwrap();
        let agent = SyntheticAgent::dense(grid.clone(), DensePolicy::uniform(2));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| agent.generate_from_state(0, 1, &mut rng).rows()[0][0] == 1.0)
            .count();
        let f = ones as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((f - 0.5).abs() < 3.0 * sigma, "{f}");
    }

    #[test]
    fn seeded_sampling_repeats() {
        let grid = Grid::new(4, Bounds::unit(1)).unwrap();
        let agent = SyntheticAgent::dense(grid, DensePolicy::uniform(16));
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| agent.generate_from_state(5, 2, &mut rng).rows())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(4), draw(4));
    }

    #[test]
    fn local_search_law_is_stochastic_and_matches_sampling() {
        let grid = Grid::new(4, Bounds::unit(1)).unwrap();
        let policy = LocalSearchPolicy::new(grid.clone(), 0.2, 1).unwrap();
        let dense = policy.to_dense(2).unwrap();
        assert!(dense.matrix().is_column_stochastic(1e-12));
        let row = policy.row_distribution(&[0, 3]);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[policy.sample_row(&[0, 3], &mut rng)] += 1;
        }
        for (q, &c) in counts.iter().enumerate() {
            let p = row[q];
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() < 4.0 * sigma, "point {q}");
        }
    }

    #[test]
    fn logits_policy_respects_top_k() {
        let logits = DenseMatrix::from_columns(&[vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]]);
        let p = DensePolicy::from_logits(&logits, 1.0, Some(2)).unwrap();
        assert_eq!(p.probability(0, 0), 0.0);
        assert_eq!(p.probability(2, 1), 0.0);
        assert!(p.matrix().is_column_stochastic(1e-12));
    }

    #[test]
    fn rejects_non_stochastic() {
        let m = DenseMatrix::from_columns(&[vec![0.5, 0.6], vec![0.5, 0.5]]);
        assert!(matches!(DensePolicy::from_matrix(m), Err(AgentError::NotStochastic(_))));
    }
}
