//! Exhaustive maximum-likelihood support decoding and Monte-Carlo error estimates.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::FiniteSizeBound;
use crate::error::{Error, Result};
use crate::model::{
    marginal_log_likelihood, sample_dataset, BetaPrior, Combinations, ObservationModel, Observations, ProblemDims,
    SupportSet, VariableDistribution, DEFAULT_PRIOR_DRAWS,
};
use crate::numeric::{derive_seed, wilson_interval, Z_95};

/// Scores within this relative distance of the running best count as ties.
pub const TIE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub support: SupportSet,
    pub log_likelihood: f64,
}

/// Maximise the (coefficient-marginalised) likelihood over every `K`-subset.
///
/// Subsets are visited in lexicographic order with a running argmax, so ties go to the
/// lexicographically smallest subset. `seed` only matters when the prior has to be
/// integrated by Monte Carlo.
pub fn ml_decode(
    model: &ObservationModel,
    q: &VariableDistribution,
    prior: &BetaPrior,
    obs: &Observations,
    seed: u64,
) -> Result<Decoded> {
    let dims = obs.dims();
    dims.check_enumerable()?;
    let k = dims.k_sparse;
    model.check_compatible(k, q)?;
    prior.validate(k)?;
    let mut cols = Vec::with_capacity(dims.n_samples * k);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for cand in Combinations::new(dims.n_vars, k) {
        obs.columns_into(&cand, &mut cols);
        let score = marginal_log_likelihood(model, q, prior, &cols, obs.y(), seed, DEFAULT_PRIOR_DRAWS)?.value;
        let better = match &best {
            None => true,
            Some((_, b)) if *b == f64::NEG_INFINITY => score > *b,
            Some((_, b)) => score > b + TIE_REL_TOL * b.abs().max(1.0),
        };
        if better {
            best = Some((cand, score));
        }
    }
    let (idx, ll) = best.expect("at least one subset");
    Ok(Decoded {
        support: SupportSet::new(idx, dims.n_vars)?,
        log_likelihood: ll,
    })
}

/// Uniformly random `K`-subset of `0..N`.
pub fn random_support(dims: &ProblemDims, seed: u64) -> Result<SupportSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = rand::seq::index::sample(&mut rng, dims.n_vars, dims.k_sparse).into_vec();
    SupportSet::from_unsorted(idx, dims.n_vars)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub errors_total: u64,
    /// Number of failed trials by how many decoded indices differ from the truth.
    pub errors_by_overlap: BTreeMap<usize, u64>,
    pub empirical_pe: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub analytic_union_bound: Option<f64>,
    pub dims: ProblemDims,
    pub model_id: String,
    pub seed: u64,
    /// `fixed` when the decoder knows the coefficients, `marginalized` otherwise.
    pub beta_mode: String,
}

impl SimulationReport {
    /// Empirical rate and Wilson interval for errors of exactly `i` differing indices.
    pub fn rate_for(&self, i: usize) -> (f64, f64, f64) {
        let e = self.errors_by_overlap.get(&i).copied().unwrap_or(0);
        let (lo, hi) = wilson_interval(e, self.trials, Z_95);
        (e as f64 / self.trials as f64, lo, hi)
    }
}

/// Run `n_trials` independent trials. Trial `j` draws its support, data and decoder
/// randomness from `derive_seed(seed, j)`, so results do not depend on scheduling.
pub fn run_trials(
    model: &ObservationModel,
    q: &VariableDistribution,
    prior: &BetaPrior,
    dims: &ProblemDims,
    n_trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    dims.check_enumerable()?;
    model.check_compatible(dims.k_sparse, q)?;
    prior.validate(dims.k_sparse)?;
    let overlaps = (0..n_trials)
        .into_par_iter()
        .map(|j| {
            let ts = derive_seed(seed, j);
            let truth = random_support(dims, derive_seed(ts, 0))?;
            let ds = sample_dataset(model, q, prior, *dims, &truth, derive_seed(ts, 1))?;
            let dec = ml_decode(model, q, prior, &ds.obs, derive_seed(ts, 2))?;
            Ok(dec.support.differing(&truth))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut by = BTreeMap::new();
    for d in overlaps.into_iter().filter(|&d| d > 0) {
        *by.entry(d).or_insert(0u64) += 1;
    }
    let errors_total: u64 = by.values().sum();
    let (ci_lo, ci_hi) = wilson_interval(errors_total, n_trials, Z_95);
    let fixed = !model.uses_beta() || matches!(prior.enumerate(dims.k_sparse), Ok(Some(ref v)) if v.len() == 1);
    Ok(SimulationReport {
        trials: n_trials,
        errors_total,
        errors_by_overlap: by,
        empirical_pe: errors_total as f64 / n_trials as f64,
        ci_lo,
        ci_hi,
        analytic_union_bound: None,
        dims: *dims,
        model_id: model.id(),
        seed,
        beta_mode: if fixed { "fixed" } else { "marginalized" }.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passes: bool,
    pub empirical_pe: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    /// `bound - ci_lo`; negative on failure.
    pub margin: f64,
}

fn verdict(empirical: f64, lo: f64, hi: f64, bound: f64) -> Verdict {
    Verdict {
        passes: lo <= bound,
        empirical_pe: empirical,
        ci_lo: lo,
        ci_hi: hi,
        bound,
        margin: bound - lo,
    }
}

/// The bound holds at 95% confidence iff the lower Wilson limit does not exceed it.
pub fn validate_bound(
    report: &SimulationReport,
    dims: &ProblemDims,
    model_id: &str,
    bound: f64,
) -> Result<Verdict> {
    if report.dims != *dims || report.model_id != model_id {
        return Err(Error::ConfigMismatch(format!(
            "report is for {} {:?}, bound is for {model_id} {dims:?}",
            report.model_id, report.dims
        )));
    }
    if !(0.0..=1.0).contains(&bound) {
        return Err(Error::InvalidParameter(format!("bound must be a probability, got {bound}")));
    }
    Ok(verdict(report.empirical_pe, report.ci_lo, report.ci_hi, bound))
}

/// Per-`i` containment of the overlap error rates in the per-`i` bounds.
pub fn validate_per_i(report: &SimulationReport, bound: &FiniteSizeBound) -> Result<Vec<(usize, Verdict)>> {
    if bound.n_samples != report.dims.n_samples || bound.per_i.len() != report.dims.k_sparse {
        return Err(Error::ConfigMismatch("finite-size bound does not match the report".into()));
    }
    Ok(bound
        .per_i
        .iter()
        .map(|b| {
            let (e, lo, hi) = report.rate_for(b.i);
            (b.i, verdict(e, lo, hi, b.bound))
        })
        .collect())
}

/// One row per report: `n,k,t,empirical_pe,ci_lo,ci_hi,union_bound`.
pub fn campaign_csv(reports: &[SimulationReport]) -> String {
    let mut out = String::from("n,k,t,empirical_pe,ci_lo,ci_hi,union_bound\n");
    for r in reports {
        let ub = r.analytic_union_bound.map_or(String::new(), |v| v.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.dims.n_vars, r.dims.k_sparse, r.dims.n_samples, r.empirical_pe, r.ci_lo, r.ci_hi, ub
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_distinct_columns_decode_truth() {
        // Columns of 3 variables over 3 tests, all distinct; truth {1}.
        let dims = ProblemDims::new(3, 1, 3).unwrap();
        let x = vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let y = vec![0.0, 1.0, 0.0];
        let obs = Observations::unmasked(dims, x, y).unwrap();
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let d = ml_decode(&ObservationModel::GroupTesting, &q, &BetaPrior::unit(1), &obs, 0).unwrap();
        assert_eq!(d.support.indices(), &[1]);
    }

    #[test]
    fn identical_columns_tie_to_smallest() {
        let dims = ProblemDims::new(3, 1, 2).unwrap();
        // Columns 1 and 2 identical and consistent with y; column 0 is not.
        let x = vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        let y = vec![1.0, 0.0];
        let obs = Observations::unmasked(dims, x, y).unwrap();
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let d = ml_decode(&ObservationModel::GroupTesting, &q, &BetaPrior::unit(1), &obs, 0).unwrap();
        assert_eq!(d.support.indices(), &[1]);
    }

    #[test]
    fn single_trial_report() {
        let dims = ProblemDims::new(4, 1, 3).unwrap();
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let r = run_trials(&ObservationModel::GroupTesting, &q, &BetaPrior::unit(1), &dims, 1, 9).unwrap();
        assert!(r.errors_total <= 1);
        assert_eq!(r.errors_by_overlap.values().sum::<u64>(), r.errors_total);
        assert!(!r.errors_by_overlap.contains_key(&0));
    }

    #[test]
    fn bound_of_one_always_passes() {
        let dims = ProblemDims::new(4, 1, 1).unwrap();
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let r = run_trials(&ObservationModel::GroupTesting, &q, &BetaPrior::unit(1), &dims, 50, 1).unwrap();
        let v = validate_bound(&r, &dims, "group-testing", 1.0).unwrap();
        assert!(v.passes);
        let bad = validate_bound(&r, &dims, "probit", 1.0);
        assert!(matches!(bad, Err(Error::ConfigMismatch(_))));
    }
}
