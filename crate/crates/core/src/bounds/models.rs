use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_epsilon, necessity_numerator, necessity_threshold, sufficiency_numerator, sufficiency_threshold_fixed,
    BoundKind, BoundReport, PerIRecord,
};
use crate::error::{Error, Result};
use crate::exponent::eo_second_derivative_bound;
use crate::info::{mi_for_beta, mi_group_testing, mi_probit, probit_entropy_bounds, ProbitEntropyCheck};
use crate::model::{ObservationModel, ProblemDims, SupportPartition, VariableDistribution};

/// Upper end of the bisection range for self-consistent thresholds.
pub const T_SEARCH_MAX: f64 = 1e12;

/// Smallest `T >= 0` with `T · denominator(T) >= target`, assuming the left side is
/// nondecreasing in `T`. The returned value is accurate to `1e-9` relative.
pub fn solve_self_consistent<F: Fn(f64) -> f64>(target: f64, denominator: F) -> Result<f64> {
    if target <= 0.0 {
        return Ok(0.0);
    }
    let g = |t: f64| t * denominator(t);
    if g(T_SEARCH_MAX) < target {
        return Err(Error::NoFiniteThreshold(format!(
            "T * denominator(T) stays below {target:.6e} up to T = {T_SEARCH_MAX:e}"
        )));
    }
    let (mut lo, mut hi) = (0.0, T_SEARCH_MAX);
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `½ log(1 + i σ² SNR / T)`, the averaged-coefficient bound on the linear-model MI.
pub fn linear_necessity_denominator(i: usize, sigma_sq: f64, snr: f64, t: f64) -> f64 {
    0.5 * (i as f64 * sigma_sq * snr / t).ln_1p()
}

/// `2 max_i log C(N-K+i, i) / (i σ²)`: below this SNR no sample size suffices.
pub fn snr_necessity_linear(dims: &ProblemDims, sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma^2 must be positive, got {sigma_sq}")));
    }
    Ok((1..=dims.k_sparse)
        .map(|i| 2.0 * necessity_numerator(dims, i) / (i as f64 * sigma_sq))
        .fold(0.0, f64::max))
}

fn self_consistent_report<F>(kind: BoundKind, dims: &ProblemDims, numerator: F, factor: f64, denominator: &(dyn Fn(usize, f64) -> f64 + Sync)) -> Result<BoundReport>
where
    F: Fn(&ProblemDims, usize) -> f64 + Sync,
{
    let recs = (1..=dims.k_sparse)
        .into_par_iter()
        .map(|i| {
            let num = numerator(dims, i);
            if num == 0.0 {
                return Ok(PerIRecord {
                    i,
                    numerator_nats: 0.0,
                    denominator_nats: f64::NAN,
                    ratio_t: 0.0,
                    vacuous: true,
                });
            }
            let t = solve_self_consistent(factor * num, |t| denominator(i, t))?;
            Ok(PerIRecord {
                i,
                numerator_nats: num,
                denominator_nats: denominator(i, t),
                ratio_t: t,
                vacuous: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport::from_records(kind, *dims, recs))
}

/// Necessity and sufficiency for sparse linear regression with `1/T`-variance columns.
///
/// Necessity solves `T ½ log(1 + i σ² SNR/T) >= log C(N-K+i, i)`; sufficiency solves
/// `T ½ log(1 + i b_min² SNR/T) >= (1+ε) log C(N-K, i)`.
pub fn bounds_linear_regression(
    dims: &ProblemDims,
    snr: f64,
    sigma_sq: f64,
    b_min: f64,
    epsilon: f64,
) -> Result<(BoundReport, BoundReport)> {
    if !(snr > 0.0 && sigma_sq > 0.0 && b_min > 0.0) {
        return Err(Error::InvalidParameter("snr, sigma^2 and b_min must be positive".into()));
    }
    check_epsilon(epsilon)?;
    let nec = self_consistent_report(BoundKind::Necessity, dims, necessity_numerator, 1.0, &|i, t| {
        linear_necessity_denominator(i, sigma_sq, snr, t)
    })?;
    let mut suf = self_consistent_report(
        BoundKind::SufficiencyFixed,
        dims,
        sufficiency_numerator,
        1.0 + epsilon,
        &|i, t| linear_necessity_denominator(i, b_min * b_min, snr, t),
    )?;
    suf.epsilon = Some(epsilon);
    let id = ObservationModel::LinearGaussian { snr }.id();
    Ok((
        nec.with_model(id.clone()).with_param("snr", snr).with_param("sigma_sq", sigma_sq),
        suf.with_model(id).with_param("snr", snr).with_param("b_min", b_min),
    ))
}

/// Group-testing thresholds with Bernoulli(`p`) pooling.
pub fn bounds_group_testing(dims: &ProblemDims, p: f64, epsilon: f64) -> Result<(BoundReport, BoundReport)> {
    let mis = (1..=dims.k_sparse)
        .map(|i| mi_group_testing(p, i, dims.k_sparse))
        .collect::<Result<Vec<_>>>()?;
    let nec = necessity_threshold(dims, &mis)?;
    let suf = sufficiency_threshold_fixed(dims, &mis, epsilon)?;
    Ok((
        nec.with_model("group-testing").with_param("p", p),
        suf.with_model("group-testing").with_param("p", p),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbitBounds {
    pub necessity: BoundReport,
    pub sufficiency: BoundReport,
    pub entropy_checks: Vec<ProbitEntropyCheck>,
}

/// Probit thresholds with unit coefficients and standard-normal variables, together
/// with the analytic entropy-bound checks at every `i`.
pub fn bounds_probit(dims: &ProblemDims, epsilon: f64, quadrature_order: usize) -> Result<ProbitBounds> {
    let k = dims.k_sparse;
    let mis = (1..=k)
        .into_par_iter()
        .map(|i| mi_probit(i, k, quadrature_order))
        .collect::<Result<Vec<_>>>()?;
    let entropy_checks = (1..=k)
        .into_par_iter()
        .map(|i| probit_entropy_bounds(i, k, quadrature_order))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbitBounds {
        necessity: necessity_threshold(dims, &mis)?.with_model("probit"),
        sufficiency: sufficiency_threshold_fixed(dims, &mis, epsilon)?.with_model("probit"),
        entropy_checks,
    })
}

/// `R` independent problems sharing a support: every ratio divides by `R`.
pub fn bounds_multivariate(base: &BoundReport, r_problems: usize) -> Result<BoundReport> {
    if r_problems == 0 {
        return Err(Error::InvalidParameter("r_problems must be >= 1".into()));
    }
    let r = r_problems as f64;
    let recs = base
        .per_i
        .iter()
        .map(|p| PerIRecord {
            denominator_nats: p.denominator_nats * r,
            ratio_t: p.ratio_t / r,
            ..*p
        })
        .collect();
    let mut out = BoundReport::from_records(base.kind, base.dims, recs);
    out.model_id = format!("multivariate({},r={r_problems})", base.model_id);
    out.epsilon = base.epsilon;
    out.tau = base.tau;
    out.params = base.params.clone();
    out.premise_holds = base.premise_holds;
    Ok(out.with_param("r_problems", r))
}

/// SNR of the linear model with missing entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrSpec {
    Fixed(f64),
    /// `SNR = factor · T`.
    ScaledWithSamples(f64),
}

impl SnrSpec {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            SnrSpec::Fixed(s) => s,
            SnrSpec::ScaledWithSamples(f) => f * t,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            SnrSpec::Fixed(s) | SnrSpec::ScaledWithSamples(s) => s,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("SNR parameter must be positive, got {v}")));
        }
        Ok(())
    }
}

/// `½ log(1 + (1-ρ) i SNR b² / (K ρ SNR b² + T))`.
pub fn missing_sufficiency_denominator(i: usize, k: usize, miss_prob: f64, b_min: f64, snr: f64, t: f64) -> f64 {
    let sb = snr * b_min * b_min;
    0.5 * ((1.0 - miss_prob) * i as f64 * sb / (k as f64 * miss_prob * sb + t)).ln_1p()
}

/// Missing-entry thresholds: necessity is `base / (1-ρ)`; sufficiency solves
/// `T · denominator(T) >= (1+ε) log C(N-K, i)` for the linear model.
pub fn bounds_missing(
    dims: &ProblemDims,
    miss_prob: f64,
    base_necessity: &BoundReport,
    b_min: f64,
    snr: SnrSpec,
    epsilon: f64,
) -> Result<(BoundReport, BoundReport)> {
    if !(0.0..1.0).contains(&miss_prob) {
        return Err(Error::InvalidParameter(format!("need 0 <= miss_prob < 1, got {miss_prob}")));
    }
    if base_necessity.kind != BoundKind::Necessity || base_necessity.dims.n_vars != dims.n_vars || base_necessity.dims.k_sparse != dims.k_sparse {
        return Err(Error::ConfigMismatch("base necessity report does not match the dimensions".into()));
    }
    if !(b_min > 0.0) {
        return Err(Error::InvalidParameter("b_min must be positive".into()));
    }
    snr.validate()?;
    check_epsilon(epsilon)?;
    let keep = 1.0 - miss_prob;
    let recs = base_necessity
        .per_i
        .iter()
        .map(|p| PerIRecord {
            denominator_nats: p.denominator_nats * keep,
            ratio_t: p.ratio_t / keep,
            ..*p
        })
        .collect();
    let nec = BoundReport::from_records(BoundKind::Necessity, base_necessity.dims, recs)
        .with_model(format!("missing({},rho={miss_prob})", base_necessity.model_id))
        .with_param("miss_prob", miss_prob);
    let k = dims.k_sparse;
    let mut suf = self_consistent_report(
        BoundKind::SufficiencyFixed,
        dims,
        sufficiency_numerator,
        1.0 + epsilon,
        &|i, t| missing_sufficiency_denominator(i, k, miss_prob, b_min, snr.at(t), t),
    )?;
    suf.epsilon = Some(epsilon);
    let suf = suf.with_model("missing(linear)").with_param("miss_prob", miss_prob).with_param("b_min", b_min);
    Ok((nec, suf))
}

/// Whether the curvature premise `|E_o''(ρ)| <= (τ/5) I_worst(i)` holds on
/// `ρ ∈ {0, 0.25, ..., 1}` for every `i` and candidate, using the weighted bound.
pub fn scaling_premise_holds(
    model: &ObservationModel,
    q: &VariableDistribution,
    candidates: &[Vec<f64>],
    k: usize,
    tau: f64,
) -> Result<bool> {
    for i in 1..=k {
        let part = SupportPartition::leading(k, i)?;
        let mut worst = f64::INFINITY;
        let mut curv: f64 = 0.0;
        for b in candidates {
            worst = worst.min(mi_for_beta(model, q, b, &part)?.value);
            for r in [0.0, 0.25, 0.5, 0.75, 1.0] {
                curv = curv.max(eo_second_derivative_bound(model, q, b, &part, r)?.weighted);
            }
        }
        if curv > tau / 5.0 * worst {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_threshold_single_term() {
        let d = ProblemDims::new(2, 1, 1).unwrap();
        let v = snr_necessity_linear(&d, 1.0).unwrap();
        assert!((v - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((snr_necessity_linear(&d, 2.0).unwrap() - v / 2.0).abs() < 1e-15);
    }

    #[test]
    fn self_consistent_solution_satisfies_equation() {
        let target = 3.0;
        let t = solve_self_consistent(target, |t| linear_necessity_denominator(2, 1.0, 50.0, t)).unwrap();
        let g = t * linear_necessity_denominator(2, 1.0, 50.0, t);
        assert!((g - target).abs() < 1e-6);
        assert!(matches!(
            solve_self_consistent(100.0, |t| linear_necessity_denominator(1, 1.0, 1.0, t)),
            Err(Error::NoFiniteThreshold(_))
        ));
    }

    #[test]
    fn missing_scaling() {
        let d = ProblemDims::new(100, 2, 1).unwrap();
        let (nec, _) = bounds_group_testing(&d, 0.5, 0.1).unwrap();
        let (m0, s0) = bounds_missing(&d, 0.0, &nec, 1.0, SnrSpec::Fixed(100.0), 0.1).unwrap();
        assert!((m0.t_threshold - nec.t_threshold).abs() < 1e-12 * nec.t_threshold);
        let (m5, s5) = bounds_missing(&d, 0.5, &nec, 1.0, SnrSpec::Fixed(100.0), 0.1).unwrap();
        assert!((m5.t_threshold - 2.0 * nec.t_threshold).abs() < 1e-12 * nec.t_threshold);
        assert!(s5.t_threshold > s0.t_threshold);
    }

    #[test]
    fn multivariate_divides() {
        let d = ProblemDims::new(100, 2, 1).unwrap();
        let (nec, _) = bounds_group_testing(&d, 0.5, 0.1).unwrap();
        let one = bounds_multivariate(&nec, 1).unwrap();
        assert_eq!(one.per_i, nec.per_i);
        let four = bounds_multivariate(&nec, 4).unwrap();
        assert_eq!(four.t_threshold, nec.t_threshold / 4.0);
    }
}
