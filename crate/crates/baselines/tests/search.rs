use llmo_baselines::*;
use llmo_core::Bounds;
use proptest::prelude::*;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn ga_solves_the_sphere() {
    let sphere = |x: &[f64]| -((x[0] - 0.3).powi(2) + (x[1] - 0.8).powi(2));
    let gaps: Vec<f64> = (0..20)
        .map(|seed| {
            let config = GaConfig {
                seed,
                ..GaConfig::default()
            };
            -run_ga(&config, &sphere, &Bounds::unit(2), 200).unwrap().best_reward
        })
        .collect();
    let m = median(gaps);
    assert!(m < 1e-2, "median gap {m}");
}

#[test]
fn bo_finds_a_unique_peak() {
    let peak = |x: &[f64]| (-(x[0] - 0.37).powi(2) / 0.02).exp();
    let gaps: Vec<f64> = (0..20)
        .map(|seed| {
            let config = BoConfig {
                seed,
                ..BoConfig::default()
            };
            1.0 - run_bo(&config, &peak, &Bounds::unit(1), 50).unwrap().best_reward
        })
        .collect();
    let m = median(gaps);
    assert!(m < 5e-2, "median gap {m}");
}

#[test]
fn random_search_matches_order_statistics() {
    let n = 10usize;
    let runs = 4000u64;
    let best: Vec<f64> = (0..runs)
        .map(|seed| {
            brute_force(n, &|x: &[f64]| x[0], &Bounds::unit(1), 1, seed)
                .unwrap()
                .initial
                .best_reward
        })
        .collect();
    let nf = n as f64;
    let expected = nf / (nf + 1.0);
    let var = nf / ((nf + 1.0).powi(2) * (nf + 2.0));
    let mean = best.iter().sum::<f64>() / runs as f64;
    assert!(
        (mean - expected).abs() < 3.0 * (var / runs as f64).sqrt(),
        "{mean} vs {expected}"
    );
}

#[test]
fn multi_start_covers_the_global_basin() {
    // Global peak on [0, 0.1), local peak on [0.1, 1]; hill climbing stays in its basin.
    let f = |x: f64| {
        if x < 0.1 {
            2.0 - (x - 0.05).abs()
        } else {
            1.0 - (x - 0.55).abs()
        }
    };
    let climb = |x0: &[f64]| -> Result<(Vec<f64>, f64), BaselineError> {
        let mut x = x0[0];
        let mut step = 0.01;
        while step > 1e-9 {
            let cands = [(x - step).max(0.0), (x + step).min(1.0)];
            match cands.iter().copied().find(|&c| f(c) > f(x) && (c < 0.1) == (x < 0.1)) {
                Some(c) => x = c,
                None => step *= 0.5,
            }
        }
        Ok((vec![x], f(x)))
    };
    let seeds = 400;
    let hits = (0..seeds)
        .filter(|&s| multi_start(climb, &Bounds::unit(1), 50, s).unwrap().best().1 > 1.5)
        .count();
    let coverage = 1.0 - 0.9f64.powi(50);
    let freq = hits as f64 / seeds as f64;
    let band = 3.0 * (coverage * (1.0 - coverage) / seeds as f64).sqrt();
    assert!(freq >= coverage - band, "{freq} vs expected {coverage}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn traces_are_monotone_and_count_evaluations(seed in 0u64..1000, offset in 0.0..1.0f64) {
        let r = move |x: &[f64]| (x[0] * 7.0 + offset).sin() * x[1];
        let b = Bounds::unit(2);
        let ga = run_ga(&GaConfig { seed, ..GaConfig::default() }, &r, &b, 15).unwrap();
        let bo = run_bo(&BoConfig { seed, pool: 200, ..BoConfig::default() }, &r, &b, 6).unwrap();
        let bf = brute_force(5, &r, &b, 15, seed).unwrap();
        for trace in [&ga, &bo, &bf] {
            let mut last = trace.initial.best_reward;
            let mut evals = trace.initial.evaluations;
            for rec in &trace.records {
                prop_assert!(rec.best_reward >= last);
                prop_assert!(rec.evaluations > evals);
                last = rec.best_reward;
                evals = rec.evaluations;
            }
            prop_assert_eq!(trace.best_reward, last);
        }
        prop_assert_eq!(ga.records.last().unwrap().evaluations, 5 * 16);
        prop_assert_eq!(bf.records.last().unwrap().evaluations, 5 * 16);
        prop_assert_eq!(bo.records.last().unwrap().evaluations, 5 * 7);
    }

    #[test]
    fn local_solvers_never_lose_ground(seed in 0u64..10_000) {
        let m = llmo_wireless::IfcModel::standard(&llmo_wireless::rayleigh_channels(3, 3, seed).unwrap()).unwrap();
        let init = start_point(&Bounds::unit(3), seed, 0);
        let w = wmmse(&PowerControlProblem::from(&m), &init, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        prop_assert!(w.history.windows(2).all(|h| h[1] >= h[0] - DEFAULT_TOL));
        let d = dinkelbach_ee(&m, &init, 100, 1e-10).unwrap();
        prop_assert!(d.history.windows(2).all(|h| h[1] >= h[0]));
    }
}
