use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::VariableDistribution;
use super::observation::ObservationModel;
use super::prior::BetaPrior;
use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, LN_SQRT_2PI};

/// Prior draws used by the Monte-Carlo fallback of [`marginal_log_likelihood`].
pub const DEFAULT_PRIOR_DRAWS: usize = 4096;

/// `log p(Y^T | X_S^T)` with the standard error of its numerical evaluation
/// (zero for exact paths).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalLogLik {
    pub value: f64,
    pub std_error: f64,
}

/// `Σ_t log p(y_t | x_t, β)` over row-major `T × K` support columns; `None` entries are
/// marginalised under `q`.
pub fn conditional_log_likelihood(
    model: &ObservationModel,
    q: &VariableDistribution,
    x_cols: &[Option<f64>],
    y: &[f64],
    beta: &[f64],
) -> Result<f64> {
    let k = beta.len();
    if k == 0 || x_cols.len() != y.len() * k {
        return Err(Error::InvalidParameter(format!(
            "expected {} x {} support values, got {}",
            y.len(),
            k,
            x_cols.len()
        )));
    }
    let mut total = 0.0;
    let mut full = vec![0.0; k];
    for (row, &yt) in x_cols.chunks(k).zip(y) {
        let ll = if row.iter().all(Option::is_some) {
            for (f, v) in full.iter_mut().zip(row) {
                *f = v.expect("checked");
            }
            model.log_likelihood(&full, beta, yt)?
        } else {
            model.log_likelihood_masked(q, row, beta, yt)?
        };
        if ll == f64::NEG_INFINITY {
            return Ok(ll);
        }
        total += ll;
    }
    Ok(total)
}

/// `log ∫ p(β) Π_t p(y_t | x_t, β) dβ`.
///
/// Exact for fixed and discrete priors and for coefficient-free models; closed form
/// for the linear model under a Gaussian prior without a floor and without erasures;
/// otherwise a seeded Monte-Carlo average over `n_draws` prior draws.
pub fn marginal_log_likelihood(
    model: &ObservationModel,
    q: &VariableDistribution,
    prior: &BetaPrior,
    x_cols: &[Option<f64>],
    y: &[f64],
    seed: u64,
    n_draws: usize,
) -> Result<MarginalLogLik> {
    let k = if y.is_empty() {
        return Ok(MarginalLogLik {
            value: 0.0,
            std_error: 0.0,
        });
    } else {
        x_cols.len() / y.len()
    };
    let exact = |value| MarginalLogLik {
        value,
        std_error: 0.0,
    };
    if !model.uses_beta() {
        let beta = match prior {
            BetaPrior::Fixed { values } if values.len() == k => values.clone(),
            _ => vec![1.0; k],
        };
        return Ok(exact(conditional_log_likelihood(model, q, x_cols, y, &beta)?));
    }
    if let Some(all) = prior.enumerate(k)? {
        if all.len() == 1 {
            return Ok(exact(conditional_log_likelihood(model, q, x_cols, y, &all[0].0)?));
        }
        let terms = all
            .iter()
            .map(|(b, m)| Ok(m.ln() + conditional_log_likelihood(model, q, x_cols, y, b)?))
            .collect::<Result<Vec<f64>>>()?;
        return Ok(exact(log_sum_exp(&terms)));
    }
    if let (
        ObservationModel::LinearGaussian { snr },
        BetaPrior::GaussianFloor { variance, b_min },
    ) = (model.inner(), prior)
    {
        if *b_min == 0.0 && x_cols.iter().all(Option::is_some) && snr.is_finite() {
            let x: Vec<f64> = x_cols.iter().map(|v| v.expect("checked")).collect();
            return Ok(exact(linear_gaussian_marginal(&x, y, k, *snr, *variance)?));
        }
    }
    if n_draws < 2 {
        return Err(Error::InvalidParameter("Monte-Carlo marginal needs at least 2 draws".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..n_draws)
        .map(|_| {
            let b = prior.sample(k, &mut rng);
            conditional_log_likelihood(model, q, x_cols, y, &b)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lse = log_sum_exp(&terms);
    let m = n_draws as f64;
    let value = lse - m.ln();
    if value == f64::NEG_INFINITY {
        return Ok(MarginalLogLik {
            value,
            std_error: 0.0,
        });
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    let mean = w.iter().sum::<f64>() / m;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(MarginalLogLik {
        value,
        std_error: (var / m).sqrt() / mean,
    })
}

/// `log N(y; 0, Xσ²Xᵀ + I/snr)` evaluated through the `K × K` capacitance matrix.
fn linear_gaussian_marginal(x: &[f64], y: &[f64], k: usize, snr: f64, prior_var: f64) -> Result<f64> {
    let t = y.len();
    let xm = DMatrix::from_row_slice(t, k, x);
    let yv = DVector::from_column_slice(y);
    let cap = DMatrix::identity(k, k) + xm.transpose() * &xm * (prior_var * snr);
    let chol = cap
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("capacitance matrix not positive definite".into()))?;
    let log_det_cap: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let u = xm.transpose() * &yv;
    let solved = chol.solve(&u);
    let quad = snr * yv.norm_squared() - snr * snr * prior_var * u.dot(&solved);
    let log_det = t as f64 * (1.0 / snr).ln() + log_det_cap;
    Ok(-(t as f64) * LN_SQRT_2PI - 0.5 * log_det - 0.5 * quad)
}
