//! Analytic formulas, exact oracles and the simulator checked against each other.

use recpersist::analytic::{
    expect_random_integral, expect_random_p1_beta, expect_random_sum, expect_symmetric_integral,
    expect_symmetric_p1_beta, max_over_p_check, p_profile, survival_curve_random,
    survival_curve_symmetric,
};
use recpersist::oracle::{
    brute_force_random, exact_symmetric_expectation, exact_symmetric_survival, to_f64,
};
use recpersist::simulator::{
    persistency, place_random_classes, random_order, simulate, simulate_samples, trial_rng,
    SimConfig, WorkloadClass,
};
use recpersist::{LossSemantics, RecParams, Strategy, SystemParams};

fn rec(p: u32, q: u32, r: u32) -> RecParams {
    RecParams::new(p, q, r).unwrap()
}

fn sys(n: u64, d: u64) -> SystemParams {
    SystemParams::new(n, d).unwrap()
}

#[test]
fn symmetric_curve_matches_exact_survival() {
    for (rc, n) in [
        (rec(1, 0, 2), 8u64),
        (rec(2, 1, 2), 24),
        (rec(1, 2, 3), 27),
        (rec(3, 0, 2), 60),
    ] {
        let s = sys(n, n);
        let exact = exact_symmetric_survival(&rc, &s, LossSemantics::PerCluster).unwrap();
        let curve = survival_curve_symmetric::<f64>(&rc, &s).unwrap();
        for (l, want) in exact.iter().enumerate() {
            let got = curve.probabilities().get(l).copied().unwrap_or(0.0);
            assert!(
                (got - to_f64(want)).abs() < 1e-12,
                "{rc} N={n} l={l}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn symmetric_integral_is_independent_of_d() {
    let rc = rec(2, 1, 2);
    let base = expect_symmetric_integral(&rc, &sys(48, 8), 1e-12)
        .unwrap()
        .value;
    for d in [9u64, 16, 100, 10_000] {
        assert_eq!(
            expect_symmetric_integral(&rc, &sys(48, d), 1e-12)
                .unwrap()
                .value,
            base
        );
    }
}

#[test]
fn symmetric_beta_matches_integral_and_oracle() {
    for (q, r, n) in [(0u32, 2u32, 4u64), (1, 1, 8), (2, 2, 60), (1, 3, 96)] {
        let rc = rec(1, q, r);
        let s = sys(n, n);
        let beta = expect_symmetric_p1_beta::<f64>(q, r, &s).unwrap().value;
        let integral = expect_symmetric_integral(&rc, &s, 1e-12).unwrap().value;
        let exact =
            to_f64(&exact_symmetric_expectation(&rc, &s, LossSemantics::PerCluster).unwrap());
        assert!((beta - exact).abs() < 1e-10 * exact, "{rc} N={n}");
        assert!((integral - exact).abs() < 1e-10 * exact, "{rc} N={n}");
    }
}

#[test]
fn random_curve_sums_to_exact_sum() {
    let rc = rec(2, 1, 2);
    let s = sys(48, 10);
    let curve = survival_curve_random::<f64>(&rc, &s);
    assert!(curve.is_nonincreasing());
    assert_eq!(curve.expectation(), expect_random_sum::<f64>(&rc, &s).value);
}

#[test]
fn random_sum_matches_enumeration() {
    for (p, q, r, n) in [(1, 0, 1, 5), (2, 1, 1, 6), (1, 1, 2, 5), (2, 0, 3, 4)] {
        let (rc, s) = (rec(p, q, r), sys(n, 1));
        let want = to_f64(&brute_force_random(&rc, &s).unwrap());
        assert!(
            (expect_random_sum::<f64>(&rc, &s).value - want).abs() < 1e-12,
            "{rc} N={n}"
        );
    }
}

#[test]
fn multi_document_random_is_survival_product() {
    // single-document survival from the enumeration, raised to the power D
    let rc = rec(1, 0, 2);
    let n = 3u64;
    let row = [1.0, 8.0 / 9.0, 5.0 / 9.0, 0.0];
    for d in [2u64, 5] {
        let want: f64 = row.iter().map(|p: &f64| p.powi(d as i32)).sum();
        assert!((expect_random_sum::<f64>(&rc, &sys(n, d)).value - want).abs() < 1e-14);
    }
}

#[test]
fn random_integral_and_beta_stay_within_one() {
    for (q, r) in [(0u32, 1u32), (0, 2), (1, 2), (2, 3)] {
        for (n, d) in [(48u64, 5u64), (2976, 5), (500, 100_000)] {
            let s = sys(n, d);
            let rc = rec(1, q, r);
            let sum = expect_random_sum::<f64>(&rc, &s).value;
            let integral = expect_random_integral(&rc, &s, 1e-10).unwrap().value;
            let beta = expect_random_p1_beta::<f64>(q, r, &s).unwrap().value;
            assert!(
                (sum - integral).abs() <= 1.0 + n as f64 * 1e-10,
                "{rc} N={n} D={d}"
            );
            assert!((sum - beta).abs() <= 1.0, "{rc} N={n} D={d}");
        }
    }
}

#[test]
fn p_maximality_examples() {
    assert!(max_over_p_check::<f64>(1, 2, &sys(48, 10), 4).unwrap());
    assert!(max_over_p_check::<f64>(2, 1, &sys(24, 8), 4).unwrap());
    let flat = p_profile::<f64>(Strategy::Symmetric, 0, 1, &sys(12, 12), 3).unwrap();
    assert_eq!(flat.len(), 3);
    assert!(flat.iter().all(|&(_, v)| (v - 1.0).abs() < 1e-12));
    assert!(max_over_p_check::<f64>(0, 1, &sys(12, 12), 1).is_err());
}

#[test]
fn simulator_agrees_with_random_theory() {
    let (rc, s) = (rec(2, 1, 2), sys(48, 10));
    let summary = simulate(&SimConfig::uniform(Strategy::Random, rc, s, 20_000, 77)).unwrap();
    assert!(
        summary.within(expect_random_sum::<f64>(&rc, &s).value, 4.0),
        "{summary:?}"
    );
}

#[test]
fn simulator_agrees_with_symmetric_multiset_oracle() {
    let (rc, s) = (rec(2, 1, 2), sys(48, 8));
    let cfg = SimConfig::uniform(Strategy::Symmetric, rc, s, 20_000, 78)
        .with_semantics(LossSemantics::Multiset);
    let want = to_f64(&exact_symmetric_expectation(&rc, &s, LossSemantics::Multiset).unwrap());
    let summary = simulate(&cfg).unwrap();
    assert!(summary.within(want, 4.0), "{summary:?} vs {want}");
}

#[test]
fn mixed_workload_is_minimum_of_classes() {
    let classes = [
        WorkloadClass::new(rec(1, 0, 2), 3).unwrap(),
        WorkloadClass::new(rec(2, 1, 1), 4).unwrap(),
    ];
    let mut rng = trial_rng(5, 0);
    for _ in 0..500 {
        let placement = place_random_classes(&classes, 20, &mut rng).unwrap();
        let order = random_order(20, &mut rng);
        for sem in [LossSemantics::Multiset, LossSemantics::PerCluster] {
            let mixed = persistency(&placement, &order, sem).unwrap().get();
            let parts: Vec<u32> = (0..2)
                .map(|c| {
                    persistency(&placement.restrict_to_code(c).unwrap(), &order, sem)
                        .unwrap()
                        .get()
                })
                .collect();
            assert_eq!(mixed, parts[0].min(parts[1]));
        }
    }
}

#[test]
fn mixed_workload_mean_below_single_classes() {
    let a = WorkloadClass::new(rec(1, 0, 2), 3).unwrap();
    let b = WorkloadClass::new(rec(2, 1, 1), 4).unwrap();
    let cfg = |classes: Vec<WorkloadClass>| SimConfig {
        strategy: Strategy::Random,
        semantics: LossSemantics::Multiset,
        classes,
        nodes: 40,
        trials: 5000,
        master_seed: 3,
    };
    let mixed = simulate(&cfg(vec![a, b])).unwrap();
    assert!(mixed.out_of_theory);
    for single in [a, b] {
        let s = simulate(&cfg(vec![single])).unwrap();
        assert!(mixed.mean <= s.mean + 3.0 * (s.std_error + mixed.std_error));
    }
}

#[test]
fn semantics_paired_dominance() {
    let base = SimConfig::uniform(Strategy::Random, rec(3, 1, 2), sys(30, 4), 2000, 8);
    let pc = simulate_samples(&base.clone().with_semantics(LossSemantics::PerCluster)).unwrap();
    let ms = simulate_samples(&base.with_semantics(LossSemantics::Multiset)).unwrap();
    assert!(pc.iter().zip(&ms).all(|(a, b)| a <= b));
    assert!(pc.iter().zip(&ms).any(|(a, b)| a < b));
}
