use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use sparsebound::info::*;
use sparsebound::model::*;
use sparsebound::Error;

const LN2: f64 = std::f64::consts::LN_2;

fn hb(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|v| **v > 0.0).map(|v| -v * v.ln()).sum()
}

fn bern(p: f64) -> VariableDistribution {
    VariableDistribution::bernoulli(p).unwrap()
}

fn part(k: usize, i: usize) -> SupportPartition {
    SupportPartition::leading(k, i).unwrap()
}

/// `I(X_U; Y | X_R)` from an explicit joint table `p(x, y)` over binary inputs, computed as
/// `H(Y | X_R) - H(Y | X)`.
fn joint_table_mi(k: usize, i: usize, p: f64, lik: impl Fn(&[u8]) -> Vec<f64>) -> f64 {
    let mut h_y_given_x = 0.0;
    let mut by_r: std::collections::HashMap<Vec<u8>, (f64, Vec<f64>)> = Default::default();
    for code in 0..(1usize << k) {
        let x: Vec<u8> = (0..k).map(|j| ((code >> j) & 1) as u8).collect();
        let px: f64 = x.iter().map(|&v| if v == 1 { p } else { 1.0 - p }).product();
        let py = lik(&x);
        h_y_given_x += px * py.iter().filter(|v| **v > 0.0).map(|v| -v * v.ln()).sum::<f64>();
        let e = by_r.entry(x[i..].to_vec()).or_insert((0.0, vec![0.0; py.len()]));
        e.0 += px;
        for (a, b) in e.1.iter_mut().zip(&py) {
            *a += px * b;
        }
    }
    let h_y_given_r: f64 = by_r
        .values()
        .map(|(pr, joint)| joint.iter().filter(|v| **v > 0.0).map(|v| -v * (v / pr).ln()).sum::<f64>())
        .sum();
    h_y_given_r - h_y_given_x
}

#[test]
fn exact_enumeration_examples() {
    let gt = ObservationModel::GroupTesting;
    let v = mi_discrete_exact(&gt, &bern(0.5), &vec![1.0], &part(1, 1)).unwrap().value;
    assert!((v - LN2).abs() < 1e-15);
    let v = mi_discrete_exact(&gt, &bern(0.5), &vec![1.0; 2], &part(2, 2)).unwrap().value;
    assert!((v - hb(0.25)).abs() < 1e-12);
    assert!((v - 0.562_335).abs() < 1e-6);
    let point = VariableDistribution::tabular(vec![1.0], vec![1.0]).unwrap();
    let or = ObservationModel::Tabular(TabularChannel::boolean_or(2).unwrap());
    assert_eq!(mi_discrete_exact(&or, &point, &vec![1.0; 2], &part(2, 1)).unwrap().value, 0.0);
}

#[test]
fn exact_matches_joint_table_oracle() {
    let flip = 0.12;
    let noisy = ObservationModel::Tabular(
        TabularChannel::from_fn(3, vec![0.0, 1.0], vec![1.0], 2, |x, _| {
            let on = x.iter().any(|v| *v != 0.0);
            if on { vec![flip, 1.0 - flip] } else { vec![1.0 - flip, flip] }
        })
        .unwrap(),
    );
    for i in 1..=3 {
        for p in [0.2, 0.5] {
            let got = mi_discrete_exact(&noisy, &bern(p), &vec![1.0; 3], &part(3, i)).unwrap().value;
            let oracle = joint_table_mi(3, i, p, |x| {
                let on = x.iter().any(|v| *v == 1);
                if on { vec![flip, 1.0 - flip] } else { vec![1.0 - flip, flip] }
            });
            assert!((got - oracle).abs() < 1e-12, "i={i} p={p}: {got} vs {oracle}");
        }
    }
}

#[test]
fn group_testing_closed_form_examples() {
    assert!((mi_group_testing(0.5, 1, 1).unwrap().value - LN2).abs() < 1e-15);
    let v = mi_group_testing(0.5, 1, 2).unwrap().value;
    assert!((v - 0.5 * LN2).abs() < 1e-15);
    assert!((v - 0.346_574).abs() < 1e-6);
    let gt = ObservationModel::GroupTesting;
    for (i, k) in [(1, 2), (2, 2), (2, 3), (1, 4)] {
        let closed = mi_group_testing(0.3, i, k).unwrap().value;
        let exact = mi_discrete_exact(&gt, &bern(0.3), &vec![1.0; k], &part(k, i)).unwrap().value;
        assert!((closed - exact).abs() < 1e-12);
    }
    assert!(mi_group_testing(1.0, 1, 1).is_err());
    assert!(mi_group_testing(0.0, 1, 1).is_err());
}

#[test]
fn linear_closed_form_vs_monte_carlo() {
    let t = 50;
    let snr = t as f64;
    let closed = mi_linear_gaussian(&[1.0], snr, t).unwrap().value;
    assert!((closed - 0.5 * LN2).abs() < 1e-15);
    let m = ObservationModel::linear(snr).unwrap();
    let e = mi_monte_carlo(&m, &VariableDistribution::for_linear_model(t), &vec![1.0], &part(1, 1), 200_000, 3).unwrap();
    assert!((e.value - closed).abs() <= 3.0 * e.std_error, "{} ± {}", e.value, e.std_error);
    assert_eq!(mi_linear_gaussian(&[0.0, 0.0], snr, t).unwrap().value, 0.0);
}

#[test]
fn probit_single_variable_vs_independent_monte_carlo() {
    let exact = mi_probit(1, 1, 64).unwrap().value;
    let phi = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 10_000_000usize;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let h = hb(phi.cdf(z));
        s += h;
        s2 += h * h;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    let oracle = LN2 - mean;
    assert!((exact - oracle).abs() <= 3.0 * se, "{exact} vs {oracle} ± {se}");
}

#[test]
fn probit_full_partition_and_range() {
    for k in 1..=4 {
        for i in 1..=k {
            let v = mi_probit(i, k, 64).unwrap().value;
            assert!(v > 0.0 && v <= LN2);
        }
    }
}

#[test]
fn monte_carlo_examples() {
    let e = mi_monte_carlo(&ObservationModel::GroupTesting, &bern(0.5), &vec![1.0], &part(1, 1), 1_000_000, 1).unwrap();
    assert!((e.value - LN2).abs() <= 3.0 * e.std_error.max(1e-12));
    let point = VariableDistribution::tabular(vec![1.0], vec![1.0]).unwrap();
    let or = ObservationModel::Tabular(TabularChannel::boolean_or(1).unwrap());
    let e = mi_monte_carlo(&or, &point, &vec![1.0], &part(1, 1), 10_000, 1).unwrap();
    assert!(e.value.abs() <= 3.0 * e.std_error + 1e-12);
}

#[test]
fn worst_case_examples() {
    let m = ObservationModel::linear(20.0).unwrap();
    let q = VariableDistribution::for_linear_model(10);
    let cands = sign_grid(3, 0.5);
    let p = part(3, 2);
    let (e, _) = mi_worst_case(&m, &q, &cands, &p).unwrap();
    let expected = 0.5 * (1.0 + 2.0 * 0.25 * 20.0 / 10.0f64).ln();
    assert!((e.value - expected).abs() < 1e-14);
    let with_zero = vec![vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 1.0]];
    assert!(matches!(mi_worst_case(&m, &q, &with_zero, &p), Err(Error::ZeroInformation { i: 2 })));
    let single = vec![vec![1.0, -2.0, 1.0]];
    let (e, b) = mi_worst_case(&m, &q, &single, &p).unwrap();
    assert_eq!(b, single[0]);
    assert_eq!(e.value, mi_for_beta(&m, &q, &single[0], &p).unwrap().value);
}

#[test]
fn missing_examples() {
    let q = bern(0.5);
    let b = vec![1.0; 2];
    let inner = ObservationModel::GroupTesting;
    let base = mi_discrete_exact(&inner, &q, &b, &part(2, 1)).unwrap().value;
    let zero = ObservationModel::missing(inner.clone(), 0.0).unwrap();
    assert_eq!(mi_missing(&zero, &q, &b, &part(2, 1)).unwrap().value, base);
    let m = ObservationModel::missing(inner.clone(), 0.3).unwrap();
    let v = mi_missing(&m, &q, &b, &part(2, 1)).unwrap().value;
    assert!(v <= 0.7 * mi_group_testing(0.5, 1, 2).unwrap().value + 1e-12);
    let near_one = ObservationModel::missing(inner, 1.0 - 1e-9).unwrap();
    assert!(mi_missing(&near_one, &q, &b, &part(2, 1)).unwrap().value < 1e-8);
}

#[test]
fn continuous_alphabet_rejected_by_enumeration() {
    let q = VariableDistribution::gaussian(1.0).unwrap();
    let r = mi_discrete_exact(&ObservationModel::Probit, &q, &vec![1.0], &part(1, 1));
    assert!(matches!(r, Err(Error::ContinuousAlphabet(_)) | Err(Error::IncompatibleAlphabet(_))));
}

proptest! {
    #[test]
    fn information_is_nonnegative_and_below_outcome_entropy(
        p in 0.05f64..0.95,
        flip in 0.0f64..0.5,
        rho in 0.0f64..0.95,
        k in 1usize..4,
        i_off in 0usize..3,
    ) {
        let i = 1 + i_off % k;
        let noisy = ObservationModel::Tabular(
            TabularChannel::from_fn(k, vec![0.0, 1.0], vec![1.0], 2, |x, _| {
                if x.iter().any(|v| *v != 0.0) { vec![flip, 1.0 - flip] } else { vec![1.0 - flip, flip] }
            })
            .unwrap(),
        );
        let q = bern(p);
        let b = vec![1.0; k];
        let v = mi_discrete_exact(&noisy, &q, &b, &part(k, i)).unwrap().value;
        prop_assert!((0.0..=LN2 + 1e-12).contains(&v));
        let miss = ObservationModel::missing(noisy, rho).unwrap();
        let w = mi_missing(&miss, &q, &b, &part(k, i)).unwrap().value;
        prop_assert!(w >= 0.0);
        prop_assert!(w <= (1.0 - rho) * v + 1e-12);
    }
}
