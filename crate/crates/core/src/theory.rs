//! Executable convergence checks on a small grid with random positive agents.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::DensePolicy;
use crate::grid::{Grid, DEFAULT_CAP};
use crate::markov::{
    build_ensemble_transition, build_multi_transition, build_single_transition, check_structure, enumerate_and_order,
    monte_carlo_validate, propagate, q_max_and_eigen_init, stationary_distribution, verify_rate_laws, MarkovError,
    StateSpace, TransitionModel,
};
use crate::matrix::DenseMatrix;
use crate::optimizer::SamplerKind;
use crate::population::Bounds;
use crate::stats::fit_semilog;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySetup {
    pub levels: usize,
    pub rows: usize,
    pub dim: usize,
    pub instances: usize,
    pub seed: u64,
    /// Softmax temperature of the random agents.
    pub temperature: f64,
    /// Logits are drawn uniformly from `[-logit_scale, logit_scale]`.
    pub logit_scale: f64,
    /// Steps for rate checks and the Monte Carlo comparison.
    pub horizon: usize,
    /// Step budget for reaching the optimal set.
    pub convergence_horizon: usize,
    pub mc_runs: usize,
    pub max_agents: usize,
}

impl Default for TheorySetup {
    fn default() -> Self {
        Self {
            levels: 4,
            rows: 2,
            dim: 1,
            instances: 20,
            seed: 2024,
            temperature: 1.0,
            logit_scale: 2.0,
            horizon: 50,
            convergence_horizon: 1000,
            mc_runs: 100_000,
            max_agents: 3,
        }
    }
}

/// Reward used on the theory grid: a concave bump with its peak off the
/// grid, so every grid point has a different value.
pub fn theory_reward(x: &[f64]) -> f64 {
    -x.iter()
        .enumerate()
        .map(|(d, &v)| (v - 0.6 - 0.01 * d as f64).powi(2) * (1.0 + 0.1 * d as f64))
        .sum::<f64>()
}

pub fn theory_space(setup: &TheorySetup) -> Result<StateSpace, MarkovError> {
    let grid = Grid::new(setup.levels, Bounds::unit(setup.dim))?;
    enumerate_and_order(&grid, setup.rows, &theory_reward, DEFAULT_CAP)
}

/// Softmax of uniform random logits; every entry is positive.
pub fn random_positive_policy(states: usize, seed: u64, temperature: f64, logit_scale: f64) -> DensePolicy<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits: Vec<Vec<f64>> = (0..states)
        .map(|_| {
            (0..states)
                .map(|_| rng.random_range(-logit_scale..=logit_scale))
                .collect()
        })
        .collect();
    DensePolicy::from_logits(&DenseMatrix::from_columns(&logits), temperature, None)
        .expect("finite logits give a positive policy")
}

pub fn instance_policies(setup: &TheorySetup, states: usize) -> Vec<Arc<DensePolicy<f64>>> {
    (0..setup.instances)
        .map(|i| {
            Arc::new(random_positive_policy(
                states,
                setup.seed.wrapping_add(i as u64),
                setup.temperature,
                setup.logit_scale,
            ))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} ... {} ({})",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Block structure of elitist and LIFO matrices on every instance.
pub fn check_block_structure(setup: &TheorySetup) -> Result<CriterionResult, MarkovError> {
    let start = Instant::now();
    let space = theory_space(setup)?;
    let policies = instance_policies(setup, space.len());
    let mut failures = Vec::new();
    let mut worst_rho: f64 = 0.0;
    for (i, p) in policies.iter().enumerate() {
        let e = check_structure(&build_single_transition(&space, p.as_ref(), SamplerKind::Elitist)?);
        let l = check_structure(&build_single_transition(&space, p.as_ref(), SamplerKind::Lifo)?);
        worst_rho = worst_rho.max(e.p4_spectral_radius);
        if !e.elitist_ok() || !l.all_blocks_positive || !l.stochastic {
            failures.push(i);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(CriterionResult {
        id: 1,
        name: "block structure of elitist and LIFO chains".into(),
        passed: failures.is_empty() && secs < 60.0,
        detail: format!(
            "{} instances, failing {:?}, max rho(P4) = {worst_rho:.6}, {secs:.2}s",
            policies.len(),
            failures
        ),
    })
}

/// Elitist chains reach the optimal set; LIFO chains keep mass outside it.
pub fn check_convergence(setup: &TheorySetup) -> Result<CriterionResult, MarkovError> {
    let space = theory_space(setup)?;
    let policies = instance_policies(setup, space.len());
    let k = space.optimal_count();
    let mut worst_hit = 0usize;
    let mut missed = Vec::new();
    let mut worst_lifo: f64 = 0.0;
    for (i, p) in policies.iter().enumerate() {
        let e = build_single_transition(&space, p.as_ref(), SamplerKind::Elitist)?;
        let prop = propagate(&e, &uniform(space.len()), setup.convergence_horizon)?;
        match prop.optimal_mass.iter().position(|&m| m >= 1.0 - 1e-6) {
            Some(t) => worst_hit = worst_hit.max(t),
            None => missed.push(i),
        }
        let l = build_single_transition(&space, p.as_ref(), SamplerKind::Lifo)?;
        let pi = stationary_distribution(&l, 1e-15, 100_000);
        worst_lifo = worst_lifo.max(pi[..k].iter().sum());
    }
    Ok(CriterionResult {
        id: 2,
        name: "elitist reaches the optimum, LIFO does not".into(),
        passed: missed.is_empty() && worst_lifo < 1.0 - 1e-3,
        detail: format!(
            "elitist mass >= 1-1e-6 by t = {worst_hit} (missed {missed:?}); max LIFO stationary optimal mass {worst_lifo:.6}"
        ),
    })
}

/// Under the eigenvector start the ACR is `q_max` at every step.
pub fn check_eigen_init(setup: &TheorySetup) -> Result<CriterionResult, MarkovError> {
    let space = theory_space(setup)?;
    let policies = instance_policies(setup, space.len());
    let mut worst: f64 = 0.0;
    let mut fallbacks = 0;
    for p in &policies {
        let m = build_single_transition(&space, p.as_ref(), SamplerKind::Elitist)?;
        let e = q_max_and_eigen_init(&m)?;
        fallbacks += usize::from(e.fallback);
        let r = verify_rate_laws(&space, &m, &e.pi0, e.q_max, setup.horizon)?;
        worst = worst.max(r.max_gamma_error).max(r.max_ratio_error);
    }
    Ok(CriterionResult {
        id: 3,
        name: "eigenvector start gives constant ACR equal to q_max".into(),
        passed: worst <= 1e-10,
        detail: format!("max |gamma - q_max| and |ratio - q_max| = {worst:.3e}, {fallbacks} fallbacks"),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerLawRow {
    pub agents: usize,
    pub q_max: f64,
    pub q_max_row_level: f64,
    pub predicted: f64,
    pub slope: f64,
}

/// `q_max(L) = q_max(1)^L` for identical agents, and the semilog slope of
/// the gap grows linearly in `L`.
pub fn check_power_law(setup: &TheorySetup) -> Result<(CriterionResult, Vec<PowerLawRow>), MarkovError> {
    let space = theory_space(setup)?;
    let policies = instance_policies(setup, space.len());
    let mut rows = Vec::new();
    let mut worst_q: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    for p in &policies {
        let mut base_q = None;
        let mut base_row = None;
        let mut base_slope = None;
        for l in 1..=setup.max_agents {
            let agents: Vec<&DensePolicy<f64>> = vec![p.as_ref(); l];
            let m = build_multi_transition(&space, &agents, SamplerKind::Elitist)?;
            let exact = build_ensemble_transition(&space, &agents, SamplerKind::Elitist, 50_000_000)?;
            let e = q_max_and_eigen_init(&m)?;
            let q_row = q_max_and_eigen_init(&exact)?.q_max;
            let r = verify_rate_laws(&space, &m, &e.pi0, e.q_max, setup.horizon)?;
            let ts: Vec<f64> = (0..r.gaps.len()).map(|t| t as f64).collect();
            let slope = fit_semilog(&ts, &r.gaps)
                .map_err(|e| MarkovError::Degenerate(e.to_string()))?
                .slope;
            let q1 = *base_q.get_or_insert(e.q_max);
            let r1 = *base_row.get_or_insert(q_row);
            let s1 = *base_slope.get_or_insert(slope);
            let predicted = q1.powi(l as i32);
            worst_q = worst_q
                .max((e.q_max - predicted).abs())
                .max((q_row - r1.powi(l as i32)).abs());
            worst_slope = worst_slope.max((slope / s1 - l as f64).abs() / l as f64);
            if rows.len() < setup.max_agents {
                rows.push(PowerLawRow {
                    agents: l,
                    q_max: e.q_max,
                    q_max_row_level: q_row,
                    predicted,
                    slope,
                });
            }
        }
    }
    Ok((
        CriterionResult {
            id: 4,
            name: "q_max(L) = q_max(1)^L and slope linear in L".into(),
            passed: worst_q <= 1e-12 && worst_slope <= 0.05,
            detail: format!("max |q_max(L) - q_max(1)^L| = {worst_q:.3e}, max relative slope error {worst_slope:.3e}"),
        },
        rows,
    ))
}

/// Two different agents: the gap is a straight line in semilog scale.
pub fn check_heterogeneous_semilog(setup: &TheorySetup) -> Result<CriterionResult, MarkovError> {
    let space = theory_space(setup)?;
    let policies = instance_policies(setup, space.len());
    let (a, b) = (policies[0].as_ref(), policies[1 % policies.len()].as_ref());
    let m = build_ensemble_transition(&space, &[a, b], SamplerKind::Elitist, 50_000_000)?;
    let e = q_max_and_eigen_init(&m)?;
    let r = verify_rate_laws(&space, &m, &e.pi0, e.q_max, setup.horizon)?;
    let ts: Vec<f64> = (5..r.gaps.len()).map(|t| t as f64).collect();
    let fit = fit_semilog(&ts, &r.gaps[5..]).map_err(|e| MarkovError::Degenerate(e.to_string()))?;
    Ok(CriterionResult {
        id: 4,
        name: "heterogeneous agents decay linearly in semilog scale".into(),
        passed: fit.r_squared > 0.999,
        detail: format!(
            "R^2 = {:.12}, slope {:.6}, log10 q_max {:.6}",
            fit.r_squared,
            fit.slope,
            e.q_max.log10()
        ),
    })
}

/// Occupancy of real optimizer trajectories against matrix propagation.
pub fn check_monte_carlo(setup: &TheorySetup) -> Result<CriterionResult, MarkovError> {
    let space = theory_space(setup)?;
    let policies = instance_policies(setup, space.len());
    let model: TransitionModel<f64> = build_single_transition(&space, policies[0].as_ref(), SamplerKind::Elitist)?;
    let pi0 = uniform(space.len());
    let report = monte_carlo_validate(
        &space,
        &model,
        &policies[..1],
        SamplerKind::Elitist,
        &pi0,
        setup.mc_runs,
        setup.horizon,
        setup.seed,
    )?;
    Ok(CriterionResult {
        id: 5,
        name: "Monte Carlo occupancy within 3 sigma of propagation".into(),
        passed: report.passed(),
        detail: format!(
            "{} runs, {} cells, max deviation {:.3e}, max z {:.2}, {} outside",
            report.runs,
            report.cells,
            report.max_deviation,
            report.max_z,
            report.violations.len()
        ),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryReport {
    pub setup: TheorySetup,
    pub criteria: Vec<CriterionResult>,
    pub power_law: Vec<PowerLawRow>,
}

impl TheoryReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

pub fn run_theory_suite(setup: &TheorySetup) -> Result<TheoryReport, MarkovError> {
    let (power, rows) = check_power_law(setup)?;
    let criteria = vec![
        check_block_structure(setup)?,
        check_convergence(setup)?,
        check_eigen_init(setup)?,
        power,
        check_heterogeneous_semilog(setup)?,
        check_monte_carlo(setup)?,
    ];
    Ok(TheoryReport {
        setup: setup.clone(),
        criteria,
        power_law: rows,
    })
}
