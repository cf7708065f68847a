use proptest::prelude::*;

use sparsebound::bounds::*;
use sparsebound::info::*;
use sparsebound::model::*;
use sparsebound::numeric::log_binomial;
use sparsebound::Error;

const LN2: f64 = std::f64::consts::LN_2;

fn dims(n: usize, k: usize) -> ProblemDims {
    ProblemDims::new(n, k, 1).unwrap()
}

fn gt_mis(k: usize, p: f64) -> Vec<MIEstimate> {
    (1..=k).map(|i| mi_group_testing(p, i, k).unwrap()).collect()
}

/// `C(n, k)` by Pascal's rule in exact integer arithmetic.
fn binomial_u128(n: usize, k: usize) -> u128 {
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for m in 1..=n {
        for j in (1..=k.min(m)).rev() {
            row[j] += row[j - 1];
        }
    }
    row[k]
}

#[test]
fn log_binomial_matches_pascal_triangle() {
    for n in 0..=60usize {
        for k in 0..=n {
            let exact = (binomial_u128(n, k) as f64).ln();
            assert!((log_binomial(n as u64, k as u64) - exact).abs() <= 1e-12 * exact.max(1.0), "C({n},{k})");
        }
    }
}

#[test]
fn two_items_one_fair_test() {
    let d = dims(2, 1);
    let mis = gt_mis(1, 0.5);
    let nec = necessity_threshold(&d, &mis).unwrap();
    assert!((nec.t_threshold - 1.0).abs() < 1e-15);
    let suf = sufficiency_threshold_fixed(&d, &mis, 0.1).unwrap();
    assert_eq!(suf.t_threshold, 0.0);
    assert!(suf.has_vacuous());
}

#[test]
fn group_testing_sufficiency_hand_value() {
    let d = dims(100, 2);
    let suf = sufficiency_threshold_fixed(&d, &gt_mis(2, 0.5), 0.1).unwrap();
    // log C(98,1) = ln 98, log C(98,2) = ln 4753; I(1) = ½ ln 2, I(2) = h_b(1/4).
    let h = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
    let expected = 1.1 * (98f64.ln() / (0.5 * LN2)).max(4753f64.ln() / h);
    assert!((suf.t_threshold - expected).abs() <= 1e-12 * expected);
    assert_eq!(suf.argmax_i, 2);
}

#[test]
fn epsilon_zero_is_bare_ratio_and_doubling_mi_halves() {
    let d = dims(500, 3);
    let mis = gt_mis(3, 0.3);
    let bare = sufficiency_threshold_fixed(&d, &mis, 0.0).unwrap();
    let with = sufficiency_threshold_fixed(&d, &mis, 0.25).unwrap();
    assert!((with.t_threshold - 1.25 * bare.t_threshold).abs() < 1e-12 * bare.t_threshold);
    let doubled: Vec<MIEstimate> = mis.iter().map(|m| m.scaled(2.0)).collect();
    let a = necessity_threshold(&d, &mis).unwrap();
    let b = necessity_threshold(&d, &doubled).unwrap();
    assert!((b.t_threshold - a.t_threshold / 2.0).abs() < 1e-12 * a.t_threshold);
}

#[test]
fn zero_information_is_an_infinite_threshold() {
    let d = dims(10, 2);
    let mut mis = gt_mis(2, 0.5);
    mis[0] = MIEstimate::new(0.0, MiMethod::Exact, 0.0, 1);
    assert!(matches!(necessity_threshold(&d, &mis), Err(Error::InfiniteThreshold { i: 1 })));
}

#[test]
fn necessity_ratio_dominates_sufficiency_ratio_for_known_coefficients() {
    for k in [1usize, 2, 4, 8, 16] {
        for n in [2 * k + 1, 100, 1000, 10_000] {
            if n <= 2 * k {
                continue;
            }
            let d = dims(n, k);
            let mis = gt_mis(k, 1.0 / (k as f64 + 1.0));
            let nec = necessity_threshold(&d, &mis).unwrap();
            let suf = sufficiency_threshold_fixed(&d, &mis, 0.0).unwrap();
            for (a, b) in nec.per_i.iter().zip(&suf.per_i) {
                assert!(a.ratio_t >= b.ratio_t, "N={n} K={k} i={}", a.i);
            }
        }
    }
}

#[test]
fn scaling_sufficiency_examples() {
    let d = dims(1000, 4);
    let mis = gt_mis(4, 0.25);
    let r = sufficiency_threshold_scaling(&d, &mis, DEFAULT_TAU, 1.0, 1000.0).unwrap();
    assert!(r.t_threshold.is_finite() && r.t_threshold > 0.0);
    let cands = beta_candidates(&ObservationModel::GroupTesting, &BetaPrior::unit(4), 4).unwrap();
    let premise = scaling_premise_holds(&ObservationModel::GroupTesting, &VariableDistribution::bernoulli(0.25).unwrap(), &cands, 4, DEFAULT_TAU);
    assert!(premise.is_ok());

    // A vanishing penalty with τ = 1 + ε reproduces the fixed form.
    let eps = 0.1;
    let near = sufficiency_threshold_scaling(&d, &mis, 1.0 + eps, 1.0, 1e15).unwrap();
    let fixed = sufficiency_threshold_fixed(&d, &mis, eps).unwrap();
    assert!((near.t_threshold - fixed.t_threshold).abs() < 1e-9 * fixed.t_threshold);

    // A penalty of half the information doubles every ratio.
    let single = dims(50, 1);
    let mi = gt_mis(1, 0.5);
    let t_half = 1.0 / (0.5 * LN2);
    let base = sufficiency_threshold_scaling(&single, &mi, 2.0, 1.0, 1e300).unwrap();
    let pen = sufficiency_threshold_scaling(&single, &mi, 2.0, 1.0, t_half).unwrap();
    assert!((pen.t_threshold - 2.0 * base.t_threshold).abs() < 1e-12 * base.t_threshold);

    let fail = sufficiency_threshold_scaling(&single, &mi, 2.0, 0.5, 1.0);
    assert!(matches!(fail, Err(Error::SideConditionFailed { i: 1, .. })));
}

#[test]
fn partial_recovery_restricts_the_maximum() {
    let d = dims(300, 4);
    let mis = gt_mis(4, 0.2);
    let full = necessity_threshold(&d, &mis).unwrap();
    let all = partial_recovery_thresholds(&d, &mis, 4, ThresholdKind::Necessity).unwrap();
    assert_eq!(all.per_i, full.per_i);
    assert_eq!(all.t_threshold, full.t_threshold);
    let one = partial_recovery_thresholds(&d, &mis, 1, ThresholdKind::Necessity).unwrap();
    assert_eq!(one.per_i.len(), 1);
    assert_eq!(one.per_i[0].i, 4);
    for k in 1..=4 {
        let r = partial_recovery_thresholds(&d, &mis, k, ThresholdKind::SufficiencyFixed { epsilon: 0.1 }).unwrap();
        let f = sufficiency_threshold_fixed(&d, &mis, 0.1).unwrap();
        assert!(r.t_threshold <= f.t_threshold);
    }
}

#[test]
fn snr_threshold_examples() {
    assert!((snr_necessity_linear(&dims(2, 1), 1.0).unwrap() - 2.0 * LN2).abs() < 1e-15);
    let d = dims(SWEEP_N, SWEEP_K);
    let a = snr_necessity_linear(&d, 1.0).unwrap();
    assert!((snr_necessity_linear(&d, 2.0).unwrap() - a / 2.0).abs() < 1e-12 * a);
    assert!(matches!(
        bounds_linear_regression(&d, 0.9 * a, 1.0, 1.0, 0.1),
        Err(Error::NoFiniteThreshold(_))
    ));
}

#[test]
fn linear_necessity_decreases_in_snr() {
    let d = dims(SWEEP_N, SWEEP_K);
    let mut prev = f64::INFINITY;
    for snr in [20.0, 50.0, 100.0, 1e3, 1e4, 1e6] {
        let (nec, suf) = bounds_linear_regression(&d, snr, 1.0, 1.0, 0.1).unwrap();
        assert!(nec.t_threshold < prev);
        prev = nec.t_threshold;
        for r in nec.per_i.iter().chain(&suf.per_i) {
            let den = linear_necessity_denominator(r.i, 1.0, snr, r.ratio_t);
            let factor = if nec.per_i.contains(r) { 1.0 } else { 1.1 };
            assert!((r.ratio_t * den - factor * r.numerator_nats).abs() < 1e-6 * r.numerator_nats);
        }
    }
}

#[test]
fn group_testing_thresholds_grow_with_log_n() {
    let n_grid = [100usize, 1000, 10_000];
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = n_grid
        .iter()
        .map(|&n| bounds_group_testing(&dims(n, 2), 0.5, 0.1).unwrap().1.t_threshold)
        .collect();
    assert!(linear_fit_r2(&x, &y) > 0.99);
    let rows = group_testing_rows(2, 0.5, &n_grid, DEFAULT_EPSILON, GT_UPPER_DELTA).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].t_lower > w[0].t_lower && w[1].t_upper > w[0].t_upper);
    }
    for r in &rows {
        assert!(r.t_upper >= r.t_lower);
    }
}

#[test]
fn probit_examples() {
    let mut band = Vec::new();
    for k in [2usize, 4] {
        for n in [100usize, 1000, 10_000] {
            let b = bounds_probit(&dims(n, k), 0.1, 64).unwrap();
            for r in &b.necessity.per_i {
                assert!(r.denominator_nats > 0.0 && r.denominator_nats <= LN2 + 1e-15);
            }
            let full = b.entropy_checks.iter().find(|c| c.i == k).unwrap();
            assert!((full.h_given_revealed - LN2).abs() < 1e-12);
            assert!(b.entropy_checks.iter().all(|c| c.mi_above_bound_difference));
            band.push(b.sufficiency.t_threshold / (k as f64 * (n as f64).ln()));
        }
    }
    let (lo, hi) = band.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 4.0, "{band:?}");
}

#[test]
fn multivariate_examples() {
    let d = dims(100, 3);
    let (nec, _) = bounds_group_testing(&d, 0.3, 0.1).unwrap();
    assert_eq!(bounds_multivariate(&nec, 1).unwrap().per_i, nec.per_i);
    let four = bounds_multivariate(&nec, 4).unwrap();
    for (a, b) in four.per_i.iter().zip(&nec.per_i) {
        assert_eq!(a.ratio_t, b.ratio_t / 4.0);
    }
    assert!(bounds_multivariate(&nec, 0).is_err());
}

#[test]
fn missing_examples() {
    let d = dims(10_000, 4);
    let (nec, _) = bounds_group_testing(&d, 0.25, 0.1).unwrap();
    let snr = SnrSpec::ScaledWithSamples(1.0 / 4.0);
    let (n0, s0) = bounds_missing(&d, 0.0, &nec, 1.0, snr, 0.1).unwrap();
    assert_eq!(n0.per_i.iter().map(|r| r.ratio_t).collect::<Vec<_>>(), nec.per_i.iter().map(|r| r.ratio_t).collect::<Vec<_>>());
    let (n5, _) = bounds_missing(&d, 0.5, &nec, 1.0, snr, 0.1).unwrap();
    assert_eq!(n5.t_threshold, nec.t_threshold * 2.0);
    let (_, s3) = bounds_missing(&d, 0.3, &nec, 1.0, snr, 0.1).unwrap();
    let predicted = 2f64.ln() / (2.0 / 1.3f64).ln();
    let ratio = s3.t_threshold / s0.t_threshold;
    assert!((ratio / predicted - 1.0).abs() < 0.05, "{ratio} vs {predicted}");
    assert!(bounds_missing(&d, 1.0, &nec, 1.0, snr, 0.1).is_err());
}

#[test]
fn finite_size_bound_monotonicity_and_empty_sample() {
    let q = VariableDistribution::bernoulli(0.5).unwrap();
    let prior = BetaPrior::unit(2);
    let at = |n: usize, t: usize| {
        finite_size_error_bound(&ProblemDims::new(n, 2, t).unwrap(), &ObservationModel::GroupTesting, &q, &prior, RhoStrategy::Optimize)
            .unwrap()
    };
    let zero = FiniteSizeAnalyzer::new(&dims(10, 2), &ObservationModel::GroupTesting, &q, &prior, RhoStrategy::Optimize)
        .unwrap()
        .bound_at(0)
        .unwrap();
    assert!(zero.per_i.iter().all(|b| b.bound == 1.0));
    assert_eq!(zero.union_bound, 1.0);
    for t in [10usize, 20, 40] {
        let mut prev = 0.0;
        for n in [6usize, 10, 20, 40, 80] {
            let u = at(n, t).union_bound;
            assert!(u >= prev - 1e-12);
            prev = u;
        }
    }
    let b = at(10, 30);
    for p in &b.per_i {
        let k = 2u64;
        let obj0 = -log_binomial(k, p.i as u64);
        assert!(p.objective >= obj0 - 1e-12);
    }
}

proptest! {
    #[test]
    fn finite_size_bound_nonincreasing_in_t(n in 5usize..30, p in 0.1f64..0.9, t in 1usize..40) {
        let q = VariableDistribution::bernoulli(p).unwrap();
        let prior = BetaPrior::unit(2);
        let a = FiniteSizeAnalyzer::new(&ProblemDims::new(n, 2, t).unwrap(), &ObservationModel::GroupTesting, &q, &prior, RhoStrategy::Optimize).unwrap();
        let u1 = a.bound_at(t).unwrap().union_bound;
        let u2 = a.bound_at(t + 1).unwrap().union_bound;
        prop_assert!(u2 <= u1 + 1e-12);
    }

    #[test]
    fn report_threshold_is_max_of_ratios(n in 10usize..5000, k in 1usize..5, p in 0.05f64..0.95) {
        prop_assume!(n > 2 * k);
        let d = dims(n, k);
        let r = necessity_threshold(&d, &gt_mis(k, p)).unwrap();
        let m = r.per_i.iter().map(|x| x.ratio_t).fold(0.0, f64::max);
        prop_assert_eq!(r.t_threshold, m);
        prop_assert_eq!(r.record(r.argmax_i).unwrap().ratio_t, m);
    }
}
