//! Randomized structural properties, independent of any reference numbers.

use dualinspect::numeric::normal_quantile;
use dualinspect::{
    estimate_moment, moment_asymptotic_expectation, moment_asymptotic_variance, pmf, pmf_oracle,
    sample_counts, sample_full, solve_mle, std_ratio_curve, CountPair, Method, MethodSet,
    ModelParams, RngSeed, SolverOptions, StudyConfig,
};
use proptest::prelude::*;

fn interior_params() -> impl Strategy<Value = ModelParams> {
    (0.2f64..20.0, 0.05f64..0.95, 0.05f64..0.95)
        .prop_map(|(l, p1, p2)| ModelParams::new(l, p1, p2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pmf_agrees_with_conditioning_oracle(
        params in interior_params(),
        r1 in 0u32..12,
        r2 in 0u32..12,
    ) {
        let pair = CountPair::new(r1, r2);
        let direct = pmf(params, pair);
        let oracle = pmf_oracle(params, pair, 1e-14).unwrap();
        prop_assert!(direct >= 0.0 && direct <= 1.0);
        prop_assert!((direct - oracle).abs() <= 1e-10, "{direct} vs {oracle}");
    }

    #[test]
    fn pmf_swap_symmetry(
        params in interior_params(),
        r1 in 0u32..12,
        r2 in 0u32..12,
    ) {
        let a = pmf(params, CountPair::new(r1, r2));
        let b = pmf(params.swapped(), CountPair::new(r2, r1));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_deterministic(params in interior_params(), seed in any::<u64>()) {
        let a = sample_full(params, 25, RngSeed(seed)).unwrap();
        let b = sample_full(params, 25, RngSeed(seed)).unwrap();
        prop_assert_eq!(a.items(), b.items());
        let collapsed = sample_counts(params, 25, RngSeed(seed)).unwrap();
        let from_full = a.collapse();
        prop_assert_eq!(from_full.items(), collapsed.items());
    }

    #[test]
    fn moment_estimate_satisfies_defining_equations(
        params in interior_params(),
        seed in any::<u64>(),
    ) {
        let sample = sample_counts(params, 60, RngSeed(seed)).unwrap();
        if let Ok(est) = estimate_moment(&sample) {
            let s = est.stats;
            prop_assert!((est.lambda_hat * est.p1_hat - s.r_bar_1).abs() <= 1e-10 * s.r_bar_1.abs().max(1.0));
            prop_assert!((est.lambda_hat * est.p2_hat - s.r_bar_2).abs() <= 1e-10 * s.r_bar_2.abs().max(1.0));
            prop_assert!(est.lambda_hat > 0.0);
        }
    }

    #[test]
    fn moment_asymptotics_shrink_with_sample_size(params in interior_params()) {
        let (e_small, _, _) = moment_asymptotic_expectation(params, 50).unwrap();
        let (e_large, _, _) = moment_asymptotic_expectation(params, 5000).unwrap();
        // Bias is positive and decays toward zero.
        prop_assert!(e_small > e_large);
        prop_assert!(e_large >= params.lambda());
        let (v_small, _, _) = moment_asymptotic_variance(params, 50).unwrap();
        let (v_large, _, _) = moment_asymptotic_variance(params, 100).unwrap();
        prop_assert!((v_small - 2.0 * v_large).abs() <= 1e-12 * v_small);
    }

    #[test]
    fn normal_quantile_symmetry_and_monotonicity(p in 0.001f64..0.999) {
        let q = normal_quantile(p).unwrap();
        let q_mirror = normal_quantile(1.0 - p).unwrap();
        prop_assert!((q + q_mirror).abs() <= 1e-12);
        let q_up = normal_quantile((p + 1e-4).min(0.9995)).unwrap();
        prop_assert!(q_up > q);
    }
}

proptest! {
    // The expensive cases get fewer iterations.
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mle_solution_satisfies_stationarity(
        params in (2.0f64..15.0, 0.2f64..0.9, 0.2f64..0.9)
            .prop_map(|(l, p1, p2)| ModelParams::new(l, p1, p2).unwrap()),
        seed in any::<u64>(),
    ) {
        let sample = sample_counts(params, 120, RngSeed(seed)).unwrap();
        if let Ok(est) = solve_mle(&sample, SolverOptions::default()) {
            prop_assert!(est.residuals.iter().all(|r| r.abs() <= 1e-8), "{:?}", est.residuals);
            prop_assert!(est.p1_star > 0.0 && est.p1_star < 1.0);
            prop_assert!(est.p2_star > 0.0 && est.p2_star < 1.0);
            // Swapping inspectors swaps the detection-rate estimates.
            let swapped: Vec<_> = sample
                .items()
                .iter()
                .map(|pair| (pair.r2, pair.r1))
                .collect();
            let swapped = dualinspect::CountSample::from_pairs(&swapped).unwrap();
            let est2 = solve_mle(&swapped, SolverOptions::default()).unwrap();
            prop_assert!((est2.lambda_star - est.lambda_star).abs() <= 1e-9 * est.lambda_star);
            prop_assert!((est2.p1_star - est.p2_star).abs() <= 1e-9);
            prop_assert!((est2.p2_star - est.p1_star).abs() <= 1e-9);
        }
    }

    #[test]
    fn study_is_thread_count_invariant(seed in any::<u64>()) {
        let config = StudyConfig {
            params: ModelParams::new(8.0, 0.5, 0.6).unwrap(),
            m: 40,
            replicates: 24,
            seed: RngSeed(seed),
            methods: MethodSet::all(),
        };
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = pool1.install(|| dualinspect::run_study(&config).unwrap());
        let b = pool4.install(|| dualinspect::run_study(&config).unwrap());
        let c = dualinspect::run_study_serial(&config).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
    }
}

#[test]
fn pmf_normalization_truncated() {
    let params = ModelParams::new(6.0, 0.35, 0.75).unwrap();
    let r_max = 40u32;
    let mut total = 0.0;
    for r1 in 0..=r_max {
        for r2 in 0..=r_max {
            total += pmf(params, CountPair::new(r1, r2));
        }
    }
    assert!(total >= 1.0 - 1e-8 && total <= 1.0 + 1e-12, "{total}");
}

#[test]
fn mle_failure_rate_decays_with_sample_size() {
    // No-interior-maximum outcomes become rarer as M grows.
    let params = ModelParams::new(1.0, 0.3, 0.3).unwrap();
    let failure_rate = |m: usize| {
        let config = StudyConfig {
            params,
            m,
            replicates: 300,
            seed: RngSeed(3),
            methods: MethodSet { mle: true, ..Default::default() },
        };
        let report = dualinspect::run_study(&config).unwrap();
        let s = report.summary(Method::Mle).unwrap();
        s.failures.values().sum::<usize>() as f64 / 300.0
    };
    let small = failure_rate(5);
    let large = failure_rate(80);
    assert!(small > large, "small={small} large={large}");
    assert!(large < 0.1, "large={large}");
}

#[test]
fn ratio_curve_is_below_one_and_decreasing_in_p2() {
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let curve = std_ratio_curve(10.0, 0.5, &grid, 1e-9).unwrap();
    for &(_, r) in &curve {
        assert!(r > 0.0 && r <= 1.0, "{r}");
    }
    for w in curve.windows(2) {
        assert!(w[1].1 < w[0].1, "{:?}", w);
    }
}
