use sparsebound::bounds::*;
use sparsebound::model::*;
use sparsebound::numeric::derive_seed;
use sparsebound::sim::*;
use sparsebound::Error;

fn bern(p: f64) -> VariableDistribution {
    VariableDistribution::bernoulli(p).unwrap()
}

#[test]
fn two_item_error_rate_matches_collision_analysis() {
    let dims = ProblemDims::new(2, 1, 5).unwrap();
    let r = run_trials(&ObservationModel::GroupTesting, &bern(0.5), &BetaPrior::unit(1), &dims, 100_000, 21).unwrap();
    let exact = 0.5f64.powi(6);
    assert!(r.ci_lo <= exact && exact <= r.ci_hi, "{} [{}, {}]", r.empirical_pe, r.ci_lo, r.ci_hi);
    let v = validate_bound(&r, &dims, "group-testing", 0.5f64.powi(5)).unwrap();
    assert!(v.passes);
    assert!(v.margin > 0.0);
}

#[test]
fn reports_are_reproducible() {
    let dims = ProblemDims::new(8, 2, 6).unwrap();
    let m = ObservationModel::missing(ObservationModel::GroupTesting, 0.2).unwrap();
    let a = run_trials(&m, &bern(0.4), &BetaPrior::unit(2), &dims, 500, 5).unwrap();
    let b = run_trials(&m, &bern(0.4), &BetaPrior::unit(2), &dims, 500, 5).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| run_trials(&m, &bern(0.4), &BetaPrior::unit(2), &dims, 500, 5).unwrap());
    assert_eq!(a, c);
}

#[test]
fn relabelling_variables_leaves_error_count_unchanged() {
    // Continuous outcomes make likelihood ties a null event, so decoding commutes with relabelling.
    let dims = ProblemDims::new(7, 2, 4).unwrap();
    let q = VariableDistribution::for_linear_model(4);
    let prior = BetaPrior::unit(2);
    let m = ObservationModel::linear(10.0).unwrap();
    let perm = [3usize, 6, 0, 2, 5, 1, 4];
    let (mut plain, mut relabelled) = (0, 0);
    for j in 0..400u64 {
        let ts = derive_seed(77, j);
        let truth = random_support(&dims, derive_seed(ts, 0)).unwrap();
        let ds = sample_dataset(&m, &q, &prior, dims, &truth, derive_seed(ts, 1)).unwrap();
        let d = ml_decode(&m, &q, &prior, &ds.obs, 0).unwrap();
        plain += usize::from(d.support != truth);
        let mut x = vec![0.0; dims.n_samples * dims.n_vars];
        for t in 0..dims.n_samples {
            for n in 0..dims.n_vars {
                x[t * dims.n_vars + perm[n]] = ds.obs.value(t, n).unwrap();
            }
        }
        let obs = Observations::unmasked(dims, x, ds.obs.y().to_vec()).unwrap();
        let d2 = ml_decode(&m, &q, &prior, &obs, 0).unwrap();
        assert_eq!(d2.support, d.support.relabel(&perm).unwrap());
        relabelled += usize::from(d2.support != truth.relabel(&perm).unwrap());
    }
    assert_eq!(plain, relabelled);
    assert!(plain > 0);
}

#[test]
fn high_snr_linear_recovers_support() {
    let t = 200;
    let dims = ProblemDims::new(20, 2, t).unwrap();
    let m = ObservationModel::linear(1e3).unwrap();
    let r = run_trials(&m, &VariableDistribution::for_linear_model(t), &BetaPrior::unit(2), &dims, 1000, 3).unwrap();
    assert!(r.errors_total <= 10, "{} errors", r.errors_total);
    assert_eq!(r.beta_mode, "fixed");
}

#[test]
fn group_testing_bound_contains_simulation() {
    let dims = ProblemDims::new(10, 2, 30).unwrap();
    let q = bern(0.5);
    let prior = BetaPrior::unit(2);
    let bound = finite_size_error_bound(&dims, &ObservationModel::GroupTesting, &q, &prior, RhoStrategy::Optimize).unwrap();
    let r = run_trials(&ObservationModel::GroupTesting, &q, &prior, &dims, 100_000, 7).unwrap();
    let v = validate_bound(&r, &dims, "group-testing", bound.union_bound).unwrap();
    assert!(v.passes, "{v:?}");
    for (i, v) in validate_per_i(&r, &bound).unwrap() {
        assert!(v.passes, "i = {i}: {v:?}");
    }
}

#[test]
fn bound_below_empirical_fails_with_negative_margin() {
    let dims = ProblemDims::new(6, 1, 2).unwrap();
    let r = run_trials(&ObservationModel::GroupTesting, &bern(0.5), &BetaPrior::unit(1), &dims, 2000, 1).unwrap();
    assert!(r.ci_lo > 0.01);
    let v = validate_bound(&r, &dims, "group-testing", 0.01).unwrap();
    assert!(!v.passes);
    assert!(v.margin < 0.0);
    assert!(matches!(validate_bound(&r, &dims, "group-testing", 1.5), Err(Error::InvalidParameter(_))));
    let other = ProblemDims::new(6, 1, 3).unwrap();
    assert!(matches!(validate_bound(&r, &other, "group-testing", 0.5), Err(Error::ConfigMismatch(_))));
}

#[test]
fn overlap_decomposition_adds_up() {
    let dims = ProblemDims::new(9, 3, 5).unwrap();
    let r = run_trials(&ObservationModel::GroupTesting, &bern(0.3), &BetaPrior::unit(3), &dims, 3000, 2).unwrap();
    assert_eq!(r.errors_by_overlap.values().sum::<u64>(), r.errors_total);
    assert!(r.errors_by_overlap.keys().all(|&i| (1..=3).contains(&i)));
    let total: f64 = (1..=3).map(|i| r.rate_for(i).0).sum();
    assert!((total - r.empirical_pe).abs() < 1e-15);
}

#[test]
fn marginalised_coefficients_are_reported() {
    let dims = ProblemDims::new(6, 2, 20).unwrap();
    let m = ObservationModel::linear(100.0).unwrap();
    let r = run_trials(&m, &VariableDistribution::for_linear_model(20), &BetaPrior::random_sign(1.0), &dims, 50, 4).unwrap();
    assert_eq!(r.beta_mode, "marginalized");
}

#[test]
fn campaign_csv_has_one_row_per_report() {
    let dims = ProblemDims::new(5, 1, 3).unwrap();
    let mut r = run_trials(&ObservationModel::GroupTesting, &bern(0.5), &BetaPrior::unit(1), &dims, 100, 1).unwrap();
    r.analytic_union_bound = Some(0.5);
    let csv = campaign_csv(&[r.clone(), r]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,k,t,empirical_pe,ci_lo,ci_hi,union_bound");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("5,1,3,") && lines[1].ends_with(",0.5"));
}

#[test]
fn enumeration_cap_is_enforced() {
    let dims = ProblemDims::new(200, 4, 3).unwrap();
    let r = run_trials(&ObservationModel::GroupTesting, &bern(0.5), &BetaPrior::unit(4), &dims, 1, 1);
    assert!(matches!(r, Err(Error::EnumerationCap { .. })));
}
