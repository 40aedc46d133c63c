//! Exact transition matrices over a ranked state space.
//!
//! Matrices are column-stochastic: entry `(i, j)` is the probability of
//! moving from the state of rank `j` to the state of rank `i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::DensePolicy;
use crate::matrix::{spectral_radius, DenseMatrix};
use crate::optimizer::SamplerKind;
use crate::scalar::Scalar;

use super::{MarkovError, StateSpace};

/// How the matrix was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// Exact enumeration of generated populations and row-level selection.
    RowLevel,
    /// Closed form that keeps the best of the current and generated states.
    StateLevel,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionModel<T: Scalar> {
    pub matrix: DenseMatrix<T>,
    pub optimal_count: usize,
    pub sampler: SamplerKind,
    pub agents: usize,
    pub construction: Construction,
}

/// The four blocks of the optimal / non-optimal split.
///
/// `p1` stays optimal, `p2` enters the optimal set, `p3` leaves it and `p4`
/// stays non-optimal. For an elitist sampler `p4` is often written `Q3`.
#[derive(Clone, Debug)]
pub struct Blocks<T: Scalar> {
    pub p1: DenseMatrix<T>,
    pub p2: DenseMatrix<T>,
    pub p3: DenseMatrix<T>,
    pub p4: DenseMatrix<T>,
}

impl<T: Scalar> TransitionModel<T> {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn blocks(&self) -> Blocks<T> {
        let n = self.len();
        let k = self.optimal_count;
        Blocks {
            p1: self.matrix.block(0, 0, k, k),
            p2: self.matrix.block(0, k, k, n - k),
            p3: self.matrix.block(k, 0, n - k, k),
            p4: self.matrix.block(k, k, n - k, n - k),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.matrix.is_column_stochastic(T::STOCHASTIC_TOL)
    }
}

fn check_policy<T: Scalar>(space: &StateSpace, policy: &DensePolicy<T>) -> Result<(), MarkovError> {
    if policy.states() != space.len() {
        return Err(MarkovError::Shape(format!(
            "policy covers {} states, space has {}",
            policy.states(),
            space.len()
        )));
    }
    if !policy.matrix().is_column_stochastic(T::STOCHASTIC_TOL) {
        return Err(MarkovError::NotStochastic("policy columns do not sum to one".into()));
    }
    Ok(())
}

/// Rows kept by the sampler, as grid points.
///
/// Candidates are the generated rows followed by the current rows; the best
/// remaining candidate is picked `P` times, the earliest one on ties.
fn select(sampler: SamplerKind, values: &[f64], generated: &[usize], current: &[usize]) -> Vec<usize> {
    let p = current.len();
    let pool: Vec<usize> = match sampler {
        SamplerKind::Lifo if generated.len() == p => return generated.to_vec(),
        SamplerKind::Lifo => generated.to_vec(),
        SamplerKind::Elitist => generated.iter().chain(current).copied().collect(),
    };
    let mut taken = vec![false; pool.len()];
    let mut out = Vec::with_capacity(p);
    for _ in 0..p {
        let mut pick: Option<usize> = None;
        for (c, &pt) in pool.iter().enumerate() {
            if taken[c] {
                continue;
            }
            if pick.is_none_or(|b| values[pt] > values[pool[b]]) {
                pick = Some(c);
            }
        }
        let c = pick.expect("pool has at least P rows");
        taken[c] = true;
        out.push(pool[c]);
    }
    out
}

fn assemble<T: Scalar>(n: usize, columns: Vec<Vec<T>>) -> DenseMatrix<T> {
    debug_assert_eq!(columns.len(), n);
    DenseMatrix::from_columns(&columns)
}

/// Single agent: sums `λ(generated | current)` over every generated
/// population into the state the sampler keeps.
pub fn build_single_transition<T: Scalar>(
    space: &StateSpace,
    policy: &DensePolicy<T>,
    sampler: SamplerKind,
) -> Result<TransitionModel<T>, MarkovError> {
    build_ensemble_transition(space, &[policy], sampler, usize::MAX)
}

/// `L` agents, exact: enumerates every tuple of generated populations,
/// concatenates them in agent order and applies row-level selection.
/// Refuses when `|S|^(L+1)` exceeds `work_cap`.
pub fn build_ensemble_transition<T: Scalar>(
    space: &StateSpace,
    policies: &[&DensePolicy<T>],
    sampler: SamplerKind,
    work_cap: usize,
) -> Result<TransitionModel<T>, MarkovError> {
    if policies.is_empty() {
        return Err(MarkovError::Shape("no policies".into()));
    }
    for p in policies {
        check_policy(space, p)?;
    }
    let n = space.len();
    let work = (n as u128).saturating_pow(policies.len() as u32 + 1);
    if work > work_cap as u128 {
        return Err(MarkovError::Capacity {
            count: work,
            cap: work_cap,
        });
    }
    let grid = space.grid();
    let rows = space.rows();
    let values = &space.table().values;
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let cur_raw = space.raw_of(j);
            let current = grid.state_rows(cur_raw, rows);
            let mut col = vec![T::zero(); n];
            let mut idx = vec![0usize; policies.len()];
            loop {
                let prob = policies
                    .iter()
                    .zip(&idx)
                    .fold(T::one(), |acc, (p, &x)| acc * p.probability(x, cur_raw));
                if prob > T::zero() {
                    let generated: Vec<usize> = idx.iter().flat_map(|&x| grid.state_rows(x, rows)).collect();
                    let kept = select(sampler, values, &generated, &current);
                    let i = space.rank_of(grid.state_index(&kept));
                    col[i] = col[i] + prob;
                }
                // odometer over agent outputs
                let mut l = policies.len();
                loop {
                    if l == 0 {
                        return col;
                    }
                    l -= 1;
                    idx[l] += 1;
                    if idx[l] < n {
                        break;
                    }
                    idx[l] = 0;
                }
            }
        })
        .collect();
    Ok(TransitionModel {
        matrix: assemble(n, columns),
        optimal_count: space.optimal_count(),
        sampler,
        agents: policies.len(),
        construction: Construction::RowLevel,
    })
}

/// `L` conditionally independent agents in closed form.
///
/// With `C_l(i)` the probability that agent `l` proposes a state ranked at
/// or below `i`, the chance that the best proposal is exactly `i` is
/// `Π C_l(i) − Π C_l(i+1)`. Elitist keeps the current state when nothing
/// better is proposed. This matches the row-level chain when `P = 1`.
pub fn build_multi_transition<T: Scalar>(
    space: &StateSpace,
    policies: &[&DensePolicy<T>],
    sampler: SamplerKind,
) -> Result<TransitionModel<T>, MarkovError> {
    if policies.is_empty() {
        return Err(MarkovError::Shape("no policies".into()));
    }
    for p in policies {
        check_policy(space, p)?;
    }
    let n = space.len();
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let cur_raw = space.raw_of(j);
            // tail[i] = Π_l Σ_{k ≥ i} λ_l(rank k | current), tail[n] = 0
            let mut tail = vec![T::one(); n + 1];
            tail[n] = T::zero();
            for p in policies {
                let mut acc = T::zero();
                for i in (0..n).rev() {
                    acc = acc + p.probability(space.raw_of(i), cur_raw);
                    tail[i] = tail[i] * acc;
                }
            }
            let mut col = vec![T::zero(); n];
            match sampler {
                SamplerKind::Elitist => {
                    for i in 0..j {
                        col[i] = tail[i] - tail[i + 1];
                    }
                    col[j] = tail[j];
                }
                SamplerKind::Lifo => {
                    for i in 0..n {
                        col[i] = tail[i] - tail[i + 1];
                    }
                }
            }
            col
        })
        .collect();
    Ok(TransitionModel {
        matrix: assemble(n, columns),
        optimal_count: space.optimal_count(),
        sampler,
        agents: policies.len(),
        construction: Construction::StateLevel,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub stochastic: bool,
    pub p1_upper_triangular: bool,
    pub p4_upper_triangular: bool,
    pub p3_zero: bool,
    /// Every column of `p2` has a positive entry (vacuously true when empty).
    pub p2_columns_reach_optimum: bool,
    pub p4_spectral_radius: f64,
    pub all_blocks_positive: bool,
}

impl StructureReport {
    pub fn elitist_ok(&self) -> bool {
        self.stochastic
            && self.p1_upper_triangular
            && self.p4_upper_triangular
            && self.p3_zero
            && self.p2_columns_reach_optimum
            && self.p4_spectral_radius < 1.0
    }
}

pub fn check_structure<T: Scalar>(model: &TransitionModel<T>) -> StructureReport {
    let b = model.blocks();
    let p2_ok = (0..b.p2.cols()).all(|j| b.p2.column(j).iter().any(|&v| v > T::zero()));
    let positive = |m: &DenseMatrix<T>| m.rows() * m.cols() == 0 || m.all_positive();
    StructureReport {
        stochastic: model.is_stochastic(),
        p1_upper_triangular: b.p1.is_upper_triangular(),
        p4_upper_triangular: b.p4.is_upper_triangular(),
        p3_zero: b.p3.is_zero(),
        p2_columns_reach_optimum: p2_ok,
        p4_spectral_radius: spectral_radius(&b.p4, 1e-12, 10_000).as_f64(),
        all_blocks_positive: positive(&b.p1) && positive(&b.p2) && positive(&b.p3) && positive(&b.p4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, DEFAULT_CAP};
    use crate::markov::enumerate_and_order;
    use crate::population::Bounds;

    fn space(levels: usize, rows: usize) -> StateSpace {
        let g = Grid::new(levels, Bounds::unit(1)).unwrap();
        enumerate_and_order(&g, rows, &|x: &[f64]| -(x[0] - 0.6).powi(2), DEFAULT_CAP).unwrap()
    }

    #[test]
    fn identity_policy_is_absorbing() {
        let s = space(4, 1);
        let id = DensePolicy::from_matrix(DenseMatrix::<f64>::identity(4)).unwrap();
        let m = build_single_transition(&s, &id, SamplerKind::Elitist).unwrap();
        assert_eq!(m.matrix, DenseMatrix::identity(4));
        let s = space(4, 2);
        let id = DensePolicy::from_matrix(DenseMatrix::<f64>::identity(16)).unwrap();
        let m = build_multi_transition(&s, &[&id], SamplerKind::Elitist).unwrap();
        assert_eq!(m.matrix, DenseMatrix::identity(16));
    }

    #[test]
    fn row_level_copying_promotes_the_best_row() {
        // echoing [a, b] puts a twice into the pool, so [a, a] is kept
        let s = space(4, 2);
        let id = DensePolicy::from_matrix(DenseMatrix::<f64>::identity(16)).unwrap();
        let m = build_single_transition(&s, &id, SamplerKind::Elitist).unwrap();
        let g = s.grid();
        let from = s.rank_of(g.state_index(&[2, 1]));
        let to = s.rank_of(g.state_index(&[2, 2]));
        assert_eq!(m.matrix.get(to, from), 1.0);
        let r = check_structure(&m);
        assert!(r.p1_upper_triangular && r.p4_upper_triangular && r.p3_zero);
    }

    #[test]
    fn two_state_uniform_by_hand() {
        let g = Grid::new(2, Bounds::unit(1)).unwrap();
        let s = enumerate_and_order(&g, 1, &|x: &[f64]| x[0], DEFAULT_CAP).unwrap();
        let m = build_single_transition(&s, &DensePolicy::<f64>::uniform(2), SamplerKind::Elitist).unwrap();
        // rank 0 is the optimal state
        assert_eq!(m.matrix.column(0), &[1.0, 0.0]);
        assert_eq!(m.matrix.column(1), &[0.5, 0.5]);
    }

    #[test]
    fn lifo_uniform_is_uniform() {
        let s = space(4, 2);
        let m = build_single_transition(&s, &DensePolicy::<f64>::uniform(16), SamplerKind::Lifo).unwrap();
        assert!(m.matrix.all_positive());
        for j in 0..16 {
            for &v in m.matrix.column(j) {
                assert!((v - 1.0 / 16.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn state_level_matches_row_level_for_single_rows() {
        let s = space(5, 1);
        let logits = DenseMatrix::from_columns(
            &(0..5)
                .map(|j| (0..5).map(|i| ((i * 7 + j * 3) % 5) as f64 * 0.4).collect())
                .collect::<Vec<_>>(),
        );
        let p = DensePolicy::from_logits(&logits, 1.0, None).unwrap();
        for sampler in [SamplerKind::Elitist, SamplerKind::Lifo] {
            let a = build_single_transition(&s, &p, sampler).unwrap();
            let b = build_multi_transition(&s, &[&p], sampler).unwrap();
            assert!(a.matrix.max_abs_diff(&b.matrix) < 1e-15, "{sampler:?}");
        }
    }

    #[test]
    fn multi_diagonal_is_power_of_single_stay() {
        let s = space(4, 2);
        let p = DensePolicy::<f64>::uniform(16);
        let one = build_multi_transition(&s, &[&p], SamplerKind::Elitist).unwrap();
        let two = build_multi_transition(&s, &[&p, &p], SamplerKind::Elitist).unwrap();
        for j in 0..16 {
            let stay: f64 = (j..16).map(|i| p.probability(s.raw_of(i), s.raw_of(j))).sum();
            assert!((two.matrix.get(j, j) - stay * stay).abs() < 1e-15);
            assert!((one.matrix.get(j, j) - stay).abs() < 1e-15);
        }
        assert!(two.is_stochastic());
    }

    #[test]
    fn ensemble_of_one_equals_single() {
        let s = space(3, 2);
        let p = DensePolicy::<f64>::uniform(9);
        let a = build_single_transition(&s, &p, SamplerKind::Elitist).unwrap();
        let b = build_ensemble_transition(&s, &[&p], SamplerKind::Elitist, usize::MAX).unwrap();
        assert_eq!(a.matrix, b.matrix);
        let two = build_ensemble_transition(&s, &[&p, &p], SamplerKind::Elitist, usize::MAX).unwrap();
        assert!(two.is_stochastic());
        assert!(check_structure(&two).elitist_ok());
        assert!(build_ensemble_transition(&s, &[&p, &p], SamplerKind::Elitist, 100).is_err());
    }

    #[test]
    fn selection_rule() {
        let values = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(select(SamplerKind::Elitist, &values, &[0, 3], &[2, 1]), vec![3, 2]);
        assert_eq!(select(SamplerKind::Lifo, &values, &[0, 3], &[2, 1]), vec![0, 3]);
        assert_eq!(select(SamplerKind::Lifo, &values, &[0, 3, 1, 2], &[2, 1]), vec![3, 2]);
    }
}
