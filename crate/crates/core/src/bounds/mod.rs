//! Sample-complexity thresholds and finite-size error bounds.

mod figures;
mod finite;
mod models;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::MIEstimate;
use crate::model::ProblemDims;
use crate::numeric::log_binomial;

pub use figures::{
    sample_ratio_curve, group_testing_rows, linear_fit_r2, SampleRatioPoint, ThresholdRow, SWEEP_K, SWEEP_N, GT_UPPER_DELTA,
};
pub use finite::{finite_size_error_bound, FiniteSizeAnalyzer, FiniteSizeBound, PerIBound, RhoStrategy};
pub use models::{
    bounds_group_testing, bounds_linear_regression, bounds_missing, bounds_multivariate, bounds_probit,
    linear_necessity_denominator, missing_sufficiency_denominator, scaling_premise_holds, snr_necessity_linear,
    solve_self_consistent, ProbitBounds, SnrSpec, T_SEARCH_MAX,
};

/// Default slack in the fixed-coefficient sufficiency condition.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Default `τ` in the scaling sufficiency condition.
pub const DEFAULT_TAU: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Necessity,
    SufficiencyFixed,
    SufficiencyScaling,
    FiniteSize,
    PartialRecovery,
    SnrNecessity,
}

/// One row of a threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerIRecord {
    pub i: usize,
    pub numerator_nats: f64,
    pub denominator_nats: f64,
    pub ratio_t: f64,
    /// The numerator is zero, so this term places no requirement on `T`.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub per_i: Vec<PerIRecord>,
    pub t_threshold: f64,
    pub argmax_i: usize,
    pub dims: ProblemDims,
    pub model_id: String,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    /// Additional parameters (`snr`, `miss_prob`, `r_problems`, ...).
    pub params: Vec<(String, f64)>,
    /// Outcome of the curvature premise check for scaling sufficiency, when run.
    pub premise_holds: Option<bool>,
}

impl BoundReport {
    pub(crate) fn from_records(kind: BoundKind, dims: ProblemDims, mut per_i: Vec<PerIRecord>) -> Self {
        per_i.sort_by_key(|r| r.i);
        let mut argmax = per_i.first().map_or(0, |r| r.i);
        let mut best = f64::NEG_INFINITY;
        for r in &per_i {
            if r.ratio_t > best {
                best = r.ratio_t;
                argmax = r.i;
            }
        }
        Self {
            kind,
            per_i,
            t_threshold: best.max(0.0),
            argmax_i: argmax,
            dims,
            model_id: String::new(),
            epsilon: None,
            tau: None,
            params: Vec::new(),
            premise_holds: None,
        }
    }

    pub fn with_model(mut self, id: impl Into<String>) -> Self {
        self.model_id = id.into();
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.push((name.to_string(), value));
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn record(&self, i: usize) -> Option<&PerIRecord> {
        self.per_i.iter().find(|r| r.i == i)
    }

    pub fn has_vacuous(&self) -> bool {
        self.per_i.iter().any(|r| r.vacuous)
    }
}

/// `log C(N-K+i, i)`, the necessity numerator.
pub fn necessity_numerator(dims: &ProblemDims, i: usize) -> f64 {
    let (n, k) = (dims.n_vars as u64, dims.k_sparse as u64);
    log_binomial(n - k + i as u64, i as u64)
}

/// `log C(N-K, i)`, the sufficiency numerator.
pub fn sufficiency_numerator(dims: &ProblemDims, i: usize) -> f64 {
    let (n, k) = (dims.n_vars as u64, dims.k_sparse as u64);
    log_binomial(n - k, i as u64)
}

/// Check that the estimates cover `range` exactly once each.
fn indexed<'a>(
    dims: &ProblemDims,
    mis: &'a [MIEstimate],
    range: std::ops::RangeInclusive<usize>,
) -> Result<Vec<&'a MIEstimate>> {
    let k = dims.k_sparse;
    let mut slots: Vec<Option<&MIEstimate>> = vec![None; k + 1];
    for m in mis {
        let i = m.partition_size_i;
        if i == 0 || i > k {
            return Err(Error::InvalidParameter(format!("partition size {i} outside 1..={k}")));
        }
        if slots[i].is_some() {
            return Err(Error::InvalidParameter(format!("duplicate estimate for i = {i}")));
        }
        slots[i] = Some(m);
    }
    range
        .map(|i| slots[i].ok_or_else(|| Error::InvalidParameter(format!("missing estimate for i = {i}"))))
        .collect()
}

fn ratio_records<F>(
    dims: &ProblemDims,
    mis: &[MIEstimate],
    range: std::ops::RangeInclusive<usize>,
    numerator: F,
    factor: f64,
) -> Result<Vec<PerIRecord>>
where
    F: Fn(&ProblemDims, usize) -> f64,
{
    indexed(dims, mis, range)?
        .into_iter()
        .map(|m| {
            let i = m.partition_size_i;
            let num = numerator(dims, i);
            if num == 0.0 {
                return Ok(PerIRecord {
                    i,
                    numerator_nats: 0.0,
                    denominator_nats: m.value,
                    ratio_t: 0.0,
                    vacuous: true,
                });
            }
            if m.is_zero() {
                return Err(Error::InfiniteThreshold { i });
            }
            Ok(PerIRecord {
                i,
                numerator_nats: num,
                denominator_nats: m.value,
                ratio_t: factor * num / m.value,
                vacuous: false,
            })
        })
        .collect()
}

/// `T >= max_i log C(N-K+i, i) / I_avg(i)`.
pub fn necessity_threshold(dims: &ProblemDims, mi_avg_per_i: &[MIEstimate]) -> Result<BoundReport> {
    let recs = ratio_records(dims, mi_avg_per_i, 1..=dims.k_sparse, necessity_numerator, 1.0)?;
    Ok(BoundReport::from_records(BoundKind::Necessity, *dims, recs))
}

/// `T > (1+ε) max_i log C(N-K, i) / I_worst(i)`.
pub fn sufficiency_threshold_fixed(
    dims: &ProblemDims,
    mi_worst_per_i: &[MIEstimate],
    epsilon: f64,
) -> Result<BoundReport> {
    check_epsilon(epsilon)?;
    let recs = ratio_records(dims, mi_worst_per_i, 1..=dims.k_sparse, sufficiency_numerator, 1.0 + epsilon)?;
    let mut r = BoundReport::from_records(BoundKind::SufficiencyFixed, *dims, recs);
    r.epsilon = Some(epsilon);
    Ok(r)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(())
}

/// `T > τ max_i log C(N-K, i) / (I_worst(i) - K/(T p_min))` at `T = t_current`.
pub fn sufficiency_threshold_scaling(
    dims: &ProblemDims,
    mi_worst_per_i: &[MIEstimate],
    tau: f64,
    p_min: f64,
    t_current: f64,
) -> Result<BoundReport> {
    if !(tau > 0.0) || !(p_min > 0.0 && p_min <= 1.0) || !(t_current > 0.0) {
        return Err(Error::InvalidParameter("need tau > 0, 0 < p_min <= 1 and T > 0".into()));
    }
    let penalty = dims.k_sparse as f64 / (t_current * p_min);
    let recs = indexed(dims, mi_worst_per_i, 1..=dims.k_sparse)?
        .into_iter()
        .map(|m| {
            let i = m.partition_size_i;
            let den = m.value - penalty;
            if den <= 0.0 {
                return Err(Error::SideConditionFailed {
                    i,
                    mi: m.value,
                    penalty,
                });
            }
            let num = sufficiency_numerator(dims, i);
            Ok(PerIRecord {
                i,
                numerator_nats: num,
                denominator_nats: den,
                ratio_t: tau * num / den,
                vacuous: num == 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = BoundReport::from_records(BoundKind::SufficiencyScaling, *dims, recs)
        .with_param("p_min", p_min)
        .with_param("t_current", t_current);
    r.tau = Some(tau);
    Ok(r)
}

/// Threshold family used by [`partial_recovery_thresholds`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdKind {
    Necessity,
    SufficiencyFixed { epsilon: f64 },
}

/// Recover at least `k_recover` of the `K` support indices: the maximum runs over
/// `i ∈ {K-k_recover+1, ..., K}`.
pub fn partial_recovery_thresholds(
    dims: &ProblemDims,
    mi_per_i: &[MIEstimate],
    k_recover: usize,
    kind: ThresholdKind,
) -> Result<BoundReport> {
    let k = dims.k_sparse;
    if k_recover == 0 || k_recover > k {
        return Err(Error::InvalidParameter(format!("k_recover must be in 1..={k}")));
    }
    let range = (k - k_recover + 1)..=k;
    let relevant: Vec<MIEstimate> = mi_per_i
        .iter()
        .filter(|m| range.contains(&m.partition_size_i))
        .copied()
        .collect();
    let (recs, eps) = match kind {
        ThresholdKind::Necessity => (ratio_records(dims, &relevant, range, necessity_numerator, 1.0)?, None),
        ThresholdKind::SufficiencyFixed { epsilon } => {
            check_epsilon(epsilon)?;
            (
                ratio_records(dims, &relevant, range, sufficiency_numerator, 1.0 + epsilon)?,
                Some(epsilon),
            )
        }
    };
    let mut r = BoundReport::from_records(BoundKind::PartialRecovery, *dims, recs).with_param("k_recover", k_recover as f64);
    r.epsilon = eps;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{mi_group_testing, MiMethod};

    fn gt(dims: &ProblemDims, p: f64) -> Vec<MIEstimate> {
        (1..=dims.k_sparse)
            .map(|i| mi_group_testing(p, i, dims.k_sparse).unwrap())
            .collect()
    }

    #[test]
    fn two_items_one_test() {
        let d = ProblemDims::new(2, 1, 1).unwrap();
        let r = necessity_threshold(&d, &gt(&d, 0.5)).unwrap();
        assert!((r.t_threshold - 1.0).abs() < 1e-12);
        let s = sufficiency_threshold_fixed(&d, &gt(&d, 0.5), 0.1).unwrap();
        assert_eq!(s.t_threshold, 0.0);
        assert!(s.has_vacuous());
    }

    #[test]
    fn order_invariance_and_scaling() {
        let d = ProblemDims::new(100, 3, 1).unwrap();
        let mut mis = gt(&d, 0.3);
        let a = necessity_threshold(&d, &mis).unwrap();
        mis.reverse();
        let b = necessity_threshold(&d, &mis).unwrap();
        assert_eq!(a, b);
        let doubled: Vec<_> = mis.iter().map(|m| m.scaled(2.0)).collect();
        let c = necessity_threshold(&d, &doubled).unwrap();
        assert!((c.t_threshold - a.t_threshold / 2.0).abs() < 1e-12 * a.t_threshold);
    }

    #[test]
    fn zero_information_is_infinite() {
        let d = ProblemDims::new(10, 1, 1).unwrap();
        let mis = vec![MIEstimate::new(0.0, MiMethod::Exact, 0.0, 1)];
        assert_eq!(necessity_threshold(&d, &mis).unwrap_err(), Error::InfiniteThreshold { i: 1 });
    }

    #[test]
    fn scaling_side_condition() {
        let d = ProblemDims::new(100, 2, 1).unwrap();
        let mis = gt(&d, 0.5);
        let r = sufficiency_threshold_scaling(&d, &mis, 12.0, 0.5, 10.0);
        assert!(matches!(r, Err(Error::SideConditionFailed { i: 1, .. })));
        let big = sufficiency_threshold_scaling(&d, &mis, 1.1, 1.0, 1e15).unwrap();
        let fixed = sufficiency_threshold_fixed(&d, &mis, 0.1).unwrap();
        assert!((big.t_threshold - fixed.t_threshold).abs() < 1e-9 * fixed.t_threshold);
    }

    #[test]
    fn partial_recovery_ranges() {
        let d = ProblemDims::new(50, 3, 1).unwrap();
        let mis = gt(&d, 0.3);
        let full = necessity_threshold(&d, &mis).unwrap();
        let all = partial_recovery_thresholds(&d, &mis, 3, ThresholdKind::Necessity).unwrap();
        assert_eq!(all.per_i, full.per_i);
        let one = partial_recovery_thresholds(&d, &mis, 1, ThresholdKind::Necessity).unwrap();
        assert_eq!(one.per_i.len(), 1);
        assert_eq!(one.per_i[0].i, 3);
        assert!(one.t_threshold <= full.t_threshold);
    }
}
