//! Dinkelbach-type fractional programming for the interference-channel EE
//! `Σ_d f_d(x) / B_d(x)` with `B_d = P_fix + P_tx x_d`.
//!
//! A plain Dinkelbach parameter only fits a single ratio, so each link gets
//! its own ratio parameter `y_d = √f_d / B_d` (quadratic-transform form):
//! at fixed `y` the objective `Σ_d 2 y_d √f_d(x) − y_d² B_d(x)` touches the
//! EE at the current point and lies below it elsewhere. The inner update
//! maximizes a concave surrogate of that objective, obtained by linearizing
//! the convex `−ln(interference)` terms, with cyclic coordinate search.
//! Every outer iteration therefore leaves the EE non-decreasing.

use llmo_wireless::IfcModel;
use serde::{Deserialize, Serialize};

use crate::power::PowerControlProblem;
use crate::wmmse::check_init;
use crate::BaselineError;

const COORDINATE_SWEEPS: usize = 10;
const SEARCH_STEPS: usize = 64;
pub const SILENT_START: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpResult {
    pub x: Vec<f64>,
    pub ee: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached before the outer residual fell below `tol`.
    pub converged: bool,
    /// EE after each outer iteration, starting with the initial point.
    pub history: Vec<f64>,
}

struct Surrogate<'a> {
    problem: &'a PowerControlProblem,
    p_fix: f64,
    y: Vec<f64>,
    /// Rate lower bound `f̃_d(x) = ln R_d(x) − offset_d − Σ_k c[d][k] x_k`.
    offset: Vec<f64>,
    c: Vec<Vec<f64>>,
}

impl<'a> Surrogate<'a> {
    fn at(problem: &'a PowerControlProblem, p_fix: f64, z: &[f64]) -> Self {
        let n = problem.links;
        let p = problem.p_tx;
        let rates = problem.rates(z);
        let y = (0..n).map(|d| rates[d].sqrt() / (p_fix + p * z[d])).collect();
        let mut c = vec![vec![0.0; n]; n];
        let mut offset = vec![0.0; n];
        for d in 0..n {
            let i_d = problem.interference(z, d);
            for k in (0..n).filter(|&k| k != d) {
                c[d][k] = p * problem.gain(k, d) / i_d;
            }
            offset[d] = i_d.ln() - (0..n).map(|k| c[d][k] * z[k]).sum::<f64>();
        }
        Self {
            problem,
            p_fix,
            y,
            offset,
            c,
        }
    }

    fn rate_bound(&self, x: &[f64], d: usize) -> f64 {
        self.problem.received(x, d).ln() - self.offset[d] - (0..x.len()).map(|k| self.c[d][k] * x[k]).sum::<f64>()
    }

    /// Concave on its domain; `None` where a weighted rate bound is negative.
    fn value(&self, x: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for d in 0..x.len() {
            if self.y[d] > 0.0 {
                let f = self.rate_bound(x, d);
                if f < 0.0 {
                    return None;
                }
                total += 2.0 * self.y[d] * f.sqrt();
            }
            total -= self.y[d] * self.y[d] * (self.p_fix + self.problem.p_tx * x[d]);
        }
        Some(total)
    }

    /// Moves coordinate `k` to the maximizer of the surrogate along it.
    fn coordinate(&self, x: &mut [f64], k: usize) {
        let current = x[k];
        let feasible = |t: f64, x: &mut [f64]| {
            x[k] = t;
            self.value(x).is_some()
        };
        // The domain is convex and holds the current point, so each side is one bisection.
        let edge = |target: f64, x: &mut [f64]| {
            if feasible(target, x) {
                return target;
            }
            let (mut inside, mut outside) = (current, target);
            for _ in 0..SEARCH_STEPS {
                let mid = 0.5 * (inside + outside);
                if feasible(mid, x) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        let (mut lo, mut hi) = (edge(0.0, x), edge(1.0, x));
        let eval = |t: f64, x: &mut [f64]| {
            x[k] = t;
            self.value(x).unwrap_or(f64::NEG_INFINITY)
        };
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut a = hi - ratio * (hi - lo);
        let mut b = lo + ratio * (hi - lo);
        let (mut fa, mut fb) = (eval(a, x), eval(b, x));
        for _ in 0..SEARCH_STEPS {
            if fa < fb {
                lo = a;
                a = b;
                fa = fb;
                b = lo + ratio * (hi - lo);
                fb = eval(b, x);
            } else {
                hi = b;
                b = a;
                fb = fa;
                a = hi - ratio * (hi - lo);
                fa = eval(a, x);
            }
        }
        // Keep the best of the bracket ends and the starting value.
        let mut best = (current, eval(current, x));
        for t in [lo, hi, 0.5 * (lo + hi)] {
            let v = eval(t, x);
            if v > best.1 {
                best = (t, v);
            }
        }
        x[k] = best.0;
    }

    fn maximize(&self, start: &[f64]) -> Vec<f64> {
        let mut x = start.to_vec();
        for _ in 0..COORDINATE_SWEEPS {
            let before = x.clone();
            for k in 0..x.len() {
                self.coordinate(&mut x, k);
            }
            if x.iter().zip(&before).all(|(a, b)| (a - b).abs() < 1e-13) {
                break;
            }
        }
        x
    }
}

fn energy_efficiency(problem: &PowerControlProblem, p_fix: f64, x: &[f64]) -> f64 {
    problem
        .rates(x)
        .iter()
        .zip(x)
        .map(|(f, xd)| f / (p_fix + problem.p_tx * xd))
        .sum()
}

/// Stops when one outer iteration raises the EE by less than `tol`.
/// A silent link has a zero ratio parameter and would stay silent, so zero
/// entries of `init` start at [`SILENT_START`] instead.
pub fn dinkelbach_ee(model: &IfcModel, init: &[f64], max_iter: usize, tol: f64) -> Result<FpResult, BaselineError> {
    let problem = PowerControlProblem::from(model);
    check_init(&problem, init)?;
    let mut x: Vec<f64> = init.iter().map(|&v| v.max(SILENT_START)).collect();
    let mut ee = energy_efficiency(&problem, model.p_fix, &x);
    let mut history = vec![ee];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let surrogate = Surrogate::at(&problem, model.p_fix, &x);
        let next = surrogate.maximize(&x);
        let next_ee = energy_efficiency(&problem, model.p_fix, &next);
        let residual = next_ee - ee;
        if next_ee >= ee {
            x = next;
            ee = next_ee;
        }
        history.push(ee);
        if residual < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("Dinkelbach stopped at max_iter = {max_iter} without reaching tol = {tol}");
    }
    Ok(FpResult {
        x,
        ee,
        iterations,
        converged,
        history,
    })
}
