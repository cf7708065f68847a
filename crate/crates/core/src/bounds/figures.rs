use serde::{Deserialize, Serialize};

use super::finite::{FiniteSizeAnalyzer, RhoStrategy};
use super::models::{bounds_group_testing, linear_necessity_denominator};
use super::necessity_numerator;
use crate::error::{Error, Result};
use crate::model::{BetaPrior, ObservationModel, ProblemDims, VariableDistribution};

/// Sparsity of the linear-regression figure.
pub const SWEEP_K: usize = 16;
/// Number of variables of the linear-regression figure.
pub const SWEEP_N: usize = 512;
/// Target error probability defining the finite-size upper threshold.
pub const GT_UPPER_DELTA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRatioPoint {
    pub t: f64,
    pub snr: f64,
    pub t_over_lb: f64,
}

/// `T / LB(T)` with `LB(T) = max_i log C(N-K+i, i) / (½ log(1 + i σ² SNR/T))`.
pub fn sample_ratio_curve(n_vars: usize, k_sparse: usize, snr: f64, sigma_sq: f64, t_grid: &[f64]) -> Result<Vec<SampleRatioPoint>> {
    if !(snr > 0.0 && sigma_sq > 0.0) {
        return Err(Error::InvalidParameter("snr and sigma^2 must be positive".into()));
    }
    let dims = ProblemDims::new(n_vars, k_sparse, 1)?;
    t_grid
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("sample sizes must be positive, got {t}")));
            }
            let lb = (1..=k_sparse)
                .map(|i| necessity_numerator(&dims, i) / linear_necessity_denominator(i, sigma_sq, snr, t))
                .fold(0.0, f64::max);
            Ok(SampleRatioPoint {
                t,
                snr,
                t_over_lb: t / lb,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    /// Necessity threshold.
    pub t_lower: f64,
    /// Smallest `T` whose finite-size union bound is at most [`GT_UPPER_DELTA`].
    pub t_upper: f64,
    /// Asymptotic sufficiency threshold `(1+ε) max_i log C(N-K, i) / I(i)`.
    pub t_upper_asym: f64,
}

/// Group-testing thresholds over a grid of `N`.
pub fn group_testing_rows(k: usize, p: f64, n_grid: &[usize], epsilon: f64, delta: f64) -> Result<Vec<ThresholdRow>> {
    let q = VariableDistribution::bernoulli(p)?;
    let prior = BetaPrior::unit(k);
    n_grid
        .iter()
        .map(|&n| {
            let dims = ProblemDims::new(n, k, 1)?;
            let (nec, suf) = bounds_group_testing(&dims, p, epsilon)?;
            let an = FiniteSizeAnalyzer::new(&dims, &ObservationModel::GroupTesting, &q, &prior, RhoStrategy::Optimize)?;
            Ok(ThresholdRow {
                n,
                k,
                p,
                t_lower: nec.t_threshold,
                t_upper: an.min_samples_for(delta)? as f64,
                t_upper_asym: suf.t_threshold,
            })
        })
        .collect()
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}
