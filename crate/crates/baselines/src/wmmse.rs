//! WMMSE sum-rate maximization for scalar (single-antenna) links.

use serde::{Deserialize, Serialize};

use crate::power::{PowerConstraint, PowerControlProblem};
use crate::BaselineError;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WmmseResult {
    pub x: Vec<f64>,
    pub se: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached before `|Δse| < tol`.
    pub converged: bool,
    /// Sum rate after each sweep, starting with the initial point.
    pub history: Vec<f64>,
}

pub(crate) fn check_init(problem: &PowerControlProblem, init: &[f64]) -> Result<(), BaselineError> {
    if init.len() != problem.links {
        return Err(BaselineError::Config(format!(
            "init has {} entries for {} links",
            init.len(),
            problem.links
        )));
    }
    if init.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(BaselineError::Config("init must lie in [0, 1]^D".into()));
    }
    Ok(())
}

/// Amplitudes `v_d(μ) = n_d / (m_d + μ)` clipped to `[0, √P]`.
fn amplitudes(num: &[f64], den: &[f64], mu: f64, cap: f64, keep: &[f64]) -> Vec<f64> {
    num.iter()
        .zip(den)
        .zip(keep)
        .map(|((&n, &m), &k)| {
            if m + mu > 0.0 {
                (n / (m + mu)).clamp(0.0, cap)
            } else {
                k
            }
        })
        .collect()
}

/// Alternates the MMSE receiver `u`, the weight `w` and the transmit
/// amplitude `v = √(P x)`, each in closed form. Under a sum-power
/// constraint the multiplier on `Σ v² ≤ P` is found by bisection.
pub fn wmmse(
    problem: &PowerControlProblem,
    init: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<WmmseResult, BaselineError> {
    check_init(problem, init)?;
    let d = problem.links;
    let p = problem.p_tx;
    let cap = p.sqrt();
    let amp = |i: usize, j: usize| problem.gain(i, j).sqrt();
    let mut v: Vec<f64> = init.iter().map(|x| (p * x).sqrt()).collect();
    if problem.constraint == PowerConstraint::SumPower {
        let total: f64 = v.iter().map(|a| a * a).sum();
        if total > p {
            let s = (p / total).sqrt();
            v.iter_mut().for_each(|a| *a *= s);
        }
    }
    let to_x = |v: &[f64]| v.iter().map(|a| (a * a / p).clamp(0.0, 1.0)).collect::<Vec<_>>();
    let mut history = vec![problem.sum_rate(&to_x(&v))];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let received: Vec<f64> = (0..d)
            .map(|k| 1.0 + (0..d).map(|j| problem.gain(j, k) * v[j] * v[j]).sum::<f64>())
            .collect();
        let u: Vec<f64> = (0..d).map(|k| amp(k, k) * v[k] / received[k]).collect();
        let w: Vec<f64> = (0..d).map(|k| 1.0 / (1.0 - u[k] * amp(k, k) * v[k])).collect();
        let num: Vec<f64> = (0..d).map(|k| w[k] * u[k] * amp(k, k)).collect();
        let den: Vec<f64> = (0..d)
            .map(|k| (0..d).map(|j| w[j] * u[j] * u[j] * problem.gain(k, j)).sum())
            .collect();
        v = match problem.constraint {
            PowerConstraint::PerLink => amplitudes(&num, &den, 0.0, cap, &v),
            PowerConstraint::SumPower => {
                let power = |mu: f64| amplitudes(&num, &den, mu, cap, &v).iter().map(|a| a * a).sum::<f64>();
                if power(0.0) <= p {
                    amplitudes(&num, &den, 0.0, cap, &v)
                } else {
                    let mut hi = 1.0;
                    while power(hi) > p {
                        hi *= 2.0;
                    }
                    let mut lo = 0.0;
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if power(mid) > p {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    amplitudes(&num, &den, hi, cap, &v)
                }
            }
        };
        let se = problem.sum_rate(&to_x(&v));
        let delta = (se - history.last().copied().unwrap_or(se)).abs();
        history.push(se);
        if delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("WMMSE stopped at max_iter = {max_iter} without reaching tol = {tol}");
    }
    let x = to_x(&v);
    Ok(WmmseResult {
        se: problem.sum_rate(&x),
        x,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use llmo_wireless::{BcModel, ChannelMatrix, IfcModel};

    #[test]
    fn single_link_goes_full_power() {
        let m = IfcModel::from_gains(1, vec![0.7], 10.0, 1.0).unwrap();
        let r = wmmse(&(&m).into(), &[0.3], DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(r.x, vec![1.0]);
        assert!((r.se - 8f64.ln()).abs() < 1e-15);
        assert!(r.converged);
    }

    #[test]
    fn decoupled_links_go_full_power() {
        let m = IfcModel::standard(&ChannelMatrix::diagonal(&[1.0, 0.5, 2.0]).unwrap()).unwrap();
        let r = wmmse(&(&m).into(), &[0.1, 0.5, 0.9], DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert_eq!(r.x, vec![1.0; 3]);
    }

    #[test]
    fn sum_power_is_respected() {
        let m = BcModel::from_gains(vec![1.0, 0.3, 2.0], 10.0, -1000.0).unwrap();
        let r = wmmse(&(&m).into(), &[0.9, 0.9, 0.9], DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!(r.x.iter().sum::<f64>() <= 1.0 + 1e-9, "{:?}", r.x);
        assert!(r.history.windows(2).all(|h| h[1] >= h[0] - 1e-9));
    }

    #[test]
    fn reports_non_convergence() {
        let m = IfcModel::standard(&llmo_wireless::rayleigh_channels(3, 3, 8).unwrap()).unwrap();
        let r = wmmse(&(&m).into(), &[0.5; 3], 1, 0.0).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn rejects_bad_init() {
        let m = IfcModel::from_gains(1, vec![1.0], 10.0, 1.0).unwrap();
        assert!(wmmse(&(&m).into(), &[1.5], 10, 1e-8).is_err());
        assert!(wmmse(&(&m).into(), &[0.5, 0.5], 10, 1e-8).is_err());
    }
}
