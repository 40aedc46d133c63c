//! Propagation, convergence rates and the eigenvector initialization.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::stats::{fit_line, LinearFit};

use super::{MarkovError, StateSpace, TransitionModel};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Propagation<T: Scalar> {
    /// `π^(0) … π^(t)` over ranks.
    pub distributions: Vec<Vec<T>>,
    pub optimal_mass: Vec<T>,
}

fn check_distribution<T: Scalar>(pi: &[T], n: usize) -> Result<(), MarkovError> {
    if pi.len() != n {
        return Err(MarkovError::Shape(format!(
            "distribution has {} entries, chain has {n}",
            pi.len()
        )));
    }
    let total: T = pi.iter().copied().sum();
    if pi.iter().any(|&v| v < T::zero() || !v.is_finite()) || (total.as_f64() - 1.0).abs() > 1e-9 {
        return Err(MarkovError::NotStochastic("initial distribution".into()));
    }
    Ok(())
}

/// `π^(t) = P π^(t−1)`, renormalized after every multiply.
pub fn propagate<T: Scalar>(model: &TransitionModel<T>, pi0: &[T], t: usize) -> Result<Propagation<T>, MarkovError> {
    check_distribution(pi0, model.len())?;
    let k = model.optimal_count;
    let mut distributions = Vec::with_capacity(t + 1);
    distributions.push(pi0.to_vec());
    for _ in 0..t {
        let mut next = model.matrix.mul_vec(distributions.last().expect("nonempty"));
        let total: T = next.iter().copied().sum();
        for v in &mut next {
            *v = *v / total;
        }
        distributions.push(next);
    }
    let optimal_mass = distributions.iter().map(|d| d[..k].iter().copied().sum()).collect();
    Ok(Propagation {
        distributions,
        optimal_mass,
    })
}

/// Limit distribution by power iteration from the uniform vector.
pub fn stationary_distribution<T: Scalar>(model: &TransitionModel<T>, tol: f64, max_iter: usize) -> Vec<T> {
    let n = model.len();
    let mut pi = vec![T::one() / T::of(n as f64); n];
    for _ in 0..max_iter {
        let mut next = model.matrix.mul_vec(&pi);
        let total: T = next.iter().copied().sum();
        for v in &mut next {
            *v = *v / total;
        }
        let diff = next
            .iter()
            .zip(&pi)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        pi = next;
        if diff.as_f64() < tol {
            break;
        }
    }
    pi
}

/// `Σ_s π_s (r* − best(s))`, summed directly so tiny gaps keep their precision.
pub fn expected_gap<T: Scalar>(space: &StateSpace, pi: &[T]) -> T {
    let r_star = space.optimum();
    pi.iter()
        .enumerate()
        .skip(space.optimal_count())
        .map(|(i, &p)| p * T::of(r_star - space.best_reward(i)))
        .sum()
}

/// Expected best reward `Σ_s π_s best(s)`.
pub fn expected_best_reward<T: Scalar>(space: &StateSpace, pi: &[T]) -> T {
    pi.iter()
        .enumerate()
        .map(|(i, &p)| p * T::of(space.best_reward(i)))
        .sum()
}

/// `γ^(t) = (|r* − r̄^(t)| / |r* − r̄^(0)|)^(1/t)` for `t = 1..`.
pub fn acr_series<T: Scalar>(expected_best: &[T], r_star: T) -> Result<Vec<T>, MarkovError> {
    let gaps: Vec<T> = expected_best.iter().map(|&r| (r_star - r).abs()).collect();
    acr_from_gaps(&gaps)
}

/// Same as [`acr_series`] with the gaps given directly.
pub fn acr_from_gaps<T: Scalar>(gaps: &[T]) -> Result<Vec<T>, MarkovError> {
    let g0 = *gaps.first().ok_or_else(|| MarkovError::Shape("empty series".into()))?;
    if g0 == T::zero() {
        return Err(MarkovError::Degenerate(
            "initial expected reward is already optimal".into(),
        ));
    }
    Ok(gaps
        .iter()
        .enumerate()
        .skip(1)
        .map(|(t, &g)| (g.abs() / g0.abs()).powf(T::one() / T::of(t as f64)))
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenInit<T: Scalar> {
    pub q_max: T,
    /// Rank (in the full space) of the first state whose stay probability is `q_max`.
    pub rank: usize,
    /// Eigenvector of `Q3` for `q_max`, normalized, zero on the optimal states.
    pub pi0: Vec<T>,
    /// Back-substitution failed and a point mass was used instead.
    pub fallback: bool,
}

/// Largest non-optimal stay probability and the matching initial distribution.
pub fn q_max_and_eigen_init<T: Scalar>(model: &TransitionModel<T>) -> Result<EigenInit<T>, MarkovError> {
    let b = model.blocks();
    let q3 = b.p4;
    let m = q3.rows();
    if m == 0 {
        return Err(MarkovError::Degenerate("every state is optimal".into()));
    }
    if !q3.is_upper_triangular() || !b.p3.is_zero() {
        return Err(MarkovError::NotElitist);
    }
    let diag = q3.diagonal();
    let q_max = diag.iter().copied().fold(T::neg_infinity(), T::max);
    let k = diag.iter().position(|&d| d == q_max).expect("max is attained");
    let mut v = vec![T::zero(); m];
    v[k] = T::one();
    for i in (0..k).rev() {
        let s: T = ((i + 1)..=k).map(|j| q3.get(i, j) * v[j]).sum();
        v[i] = s / (q_max - diag[i]);
    }
    let total: T = v.iter().copied().sum();
    let mut fallback = false;
    if !total.is_finite() || total <= T::zero() || v.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        v = vec![T::zero(); m];
        v[k] = T::one();
        fallback = true;
    } else {
        for x in &mut v {
            *x = *x / total;
        }
    }
    let offset = model.optimal_count;
    let mut pi0 = vec![T::zero(); model.len()];
    pi0[offset..].copy_from_slice(&v);
    Ok(EigenInit {
        q_max,
        rank: offset + k,
        pi0,
        fallback,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    pub q_max: f64,
    pub gaps: Vec<f64>,
    pub predicted_gaps: Vec<f64>,
    /// `γ^(t)` for `t = 1..=T`.
    pub gammas: Vec<f64>,
    /// `gap(t) / gap(t − 1)` for `t = 1..=T`.
    pub step_ratios: Vec<f64>,
    pub max_gamma_error: f64,
    pub max_ratio_error: f64,
    /// Least-squares line through `(t, log10 gap)`.
    pub semilog_fit: Option<LinearFit>,
}

impl RateReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_gamma_error <= tol && self.max_ratio_error <= tol
    }

    /// CSV with header `t,gap,gamma,predicted_gap`; `gamma` is empty at `t = 0`.
    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        if let Some(h) = config_hash {
            let _ = writeln!(out, "# config_hash: {h}");
        }
        out.push_str("t,gap,gamma,predicted_gap\n");
        for (t, (g, p)) in self.gaps.iter().zip(&self.predicted_gaps).enumerate() {
            let gamma = if t == 0 {
                String::new()
            } else {
                self.gammas[t - 1].to_string()
            };
            let _ = writeln!(out, "{t},{g},{gamma},{p}");
        }
        out
    }
}

/// Propagates `pi0` for `t_max` steps and compares the gap series with
/// `q_max^t · gap(0)`.
pub fn verify_rate_laws<T: Scalar>(
    space: &StateSpace,
    model: &TransitionModel<T>,
    pi0: &[T],
    q_max: T,
    t_max: usize,
) -> Result<RateReport, MarkovError> {
    let prop = propagate(model, pi0, t_max)?;
    let gaps: Vec<f64> = prop
        .distributions
        .iter()
        .map(|d| expected_gap(space, d).as_f64())
        .collect();
    let gammas: Vec<f64> = acr_from_gaps(&gaps)?;
    let q = q_max.as_f64();
    let predicted_gaps: Vec<f64> = (0..=t_max).map(|t| gaps[0] * q.powi(t as i32)).collect();
    let step_ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let max_gamma_error = gammas.iter().map(|g| (g - q).abs()).fold(0.0, f64::max);
    let max_ratio_error = step_ratios.iter().map(|r| (r - q).abs()).fold(0.0, f64::max);
    let points: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > 0.0)
        .map(|(t, &g)| (t as f64, g.log10()))
        .collect();
    Ok(RateReport {
        q_max: q,
        gaps,
        predicted_gaps,
        gammas,
        step_ratios,
        max_gamma_error,
        max_ratio_error,
        semilog_fit: fit_line(&points).ok(),
    })
}
