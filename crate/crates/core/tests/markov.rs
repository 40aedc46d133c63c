use std::sync::Arc;

use llmo_core::markov::{build_single_transition, monte_carlo_validate, propagate};
use llmo_core::theory::{instance_policies, run_theory_suite, theory_space, TheorySetup};
use llmo_core::{DensePolicy, SamplerKind};

fn small_setup() -> TheorySetup {
    TheorySetup {
        instances: 4,
        horizon: 12,
        convergence_horizon: 400,
        mc_runs: 20_000,
        max_agents: 2,
        ..TheorySetup::default()
    }
}

#[test]
fn monte_carlo_agrees_with_matching_model() {
    let setup = small_setup();
    let space = theory_space(&setup).unwrap();
    let policies = instance_policies(&setup, space.len());
    for sampler in [SamplerKind::Elitist, SamplerKind::Lifo] {
        let model = build_single_transition(&space, policies[1].as_ref(), sampler).unwrap();
        let pi0 = vec![1.0 / space.len() as f64; space.len()];
        let runs = 20_000;
        let report = monte_carlo_validate(&space, &model, &policies[1..2], sampler, &pi0, runs, 8, 77).unwrap();
        // A single hit in a cell with p near 1e-6 already sits past 3 sigma,
        // so only cells with a usable normal approximation are held to the band.
        let expected = propagate(&model, &pi0, 8).unwrap();
        let populated: Vec<_> = report
            .violations
            .iter()
            .filter(|&&(t, i)| expected.distributions[t][i] * runs as f64 >= 20.0)
            .collect();
        assert!(populated.is_empty(), "{sampler:?}: {report:?}");
        assert!(report.max_deviation < 0.02);
    }
}

#[test]
fn monte_carlo_rejects_a_mismatched_model() {
    let setup = small_setup();
    let space = theory_space(&setup).unwrap();
    let policies = instance_policies(&setup, space.len());
    let wrong = build_single_transition(&space, policies[0].as_ref(), SamplerKind::Elitist).unwrap();
    let pi0 = vec![1.0 / space.len() as f64; space.len()];
    let report = monte_carlo_validate(
        &space,
        &wrong,
        &policies[2..3],
        SamplerKind::Elitist,
        &pi0,
        20_000,
        8,
        77,
    )
    .unwrap();
    assert!(!report.passed());
    assert!(report.max_z > 10.0, "{report:?}");
}

#[test]
fn delta_policy_matches_exactly() {
    let setup = small_setup();
    let space = theory_space(&setup).unwrap();
    let target = space.raw_of(space.len() - 1);
    let policy = Arc::new(DensePolicy::delta(space.len(), target));
    for sampler in [SamplerKind::Elitist, SamplerKind::Lifo] {
        let model = build_single_transition(&space, policy.as_ref(), sampler).unwrap();
        let mut pi0 = vec![0.0; space.len()];
        pi0[3] = 1.0;
        let expected = propagate(&model, &pi0, 4).unwrap();
        assert!(expected.distributions.iter().flatten().all(|&p| p == 0.0 || p == 1.0));
        let report =
            monte_carlo_validate(&space, &model, std::slice::from_ref(&policy), sampler, &pi0, 200, 4, 1).unwrap();
        assert_eq!(report.max_deviation, 0.0, "{sampler:?}");
    }
}

#[test]
fn reduced_theory_suite_passes() {
    let report = run_theory_suite(&small_setup()).unwrap();
    for c in &report.criteria {
        assert!(c.passed, "{}", c.line());
    }
    assert_eq!(report.power_law.len(), 2);
}
