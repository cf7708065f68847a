use super::{MIEstimate, MiMethod};
use crate::error::{Error, Result};
use crate::numeric::binary_entropy;

/// Noiseless OR channel with Bernoulli(`p`) variables: `(1-p)^{K-i} h_b((1-p)^i)`.
pub fn mi_group_testing(p: f64, i: usize, k: usize) -> Result<MIEstimate> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < p < 1, got {p}")));
    }
    if i == 0 || i > k {
        return Err(Error::InvalidParameter(format!("need 1 <= i <= K, got i = {i}, K = {k}")));
    }
    let q = 1.0 - p;
    let value = q.powi((k - i) as i32) * binary_entropy(q.powi(i as i32));
    Ok(MIEstimate::new(value, MiMethod::ClosedForm, 0.0, i))
}

/// `½ log(1 + ‖β_U‖² var_q snr)` for Gaussian variables of variance `var_q`.
pub fn mi_linear_gaussian_from_norm(norm_sq: f64, var_q: f64, snr: f64, i: usize) -> MIEstimate {
    MIEstimate::new(0.5 * (norm_sq * var_q * snr).ln_1p(), MiMethod::ClosedForm, 0.0, i)
}

/// The normalised linear model (variable variance `1/T`): `½ log(1 + ‖β_U‖² SNR / T)`.
pub fn mi_linear_gaussian(beta_unknown: &[f64], snr: f64, t: usize) -> Result<MIEstimate> {
    if !(snr > 0.0) || t == 0 {
        return Err(Error::InvalidParameter(format!("need snr > 0 and T >= 1, got {snr}, {t}")));
    }
    let norm_sq: f64 = beta_unknown.iter().map(|b| b * b).sum();
    Ok(mi_linear_gaussian_from_norm(norm_sq, 1.0 / t as f64, snr, beta_unknown.len()))
}

/// Jensen upper bound on the prior-averaged MI under `E β_k² = σ²`: `½ log(1 + i σ² SNR / T)`.
pub fn mi_linear_jensen_bound(i: usize, sigma_sq: f64, snr: f64, t: usize) -> Result<MIEstimate> {
    if !(snr > 0.0) || !(sigma_sq > 0.0) || t == 0 {
        return Err(Error::InvalidParameter("need sigma^2 > 0, snr > 0 and T >= 1".into()));
    }
    Ok(mi_linear_gaussian_from_norm(i as f64 * sigma_sq, 1.0 / t as f64, snr, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn group_testing_examples() {
        assert!((mi_group_testing(0.5, 1, 1).unwrap().value - LN_2).abs() < 1e-15);
        assert!((mi_group_testing(0.5, 1, 2).unwrap().value - 0.5 * LN_2).abs() < 1e-15);
        assert!((mi_group_testing(0.5, 2, 2).unwrap().value - 0.562_335_144_618_808_6).abs() < 1e-14);
        assert!(mi_group_testing(1.0, 1, 1).is_err());
    }

    #[test]
    fn linear_examples() {
        assert_eq!(mi_linear_gaussian(&[0.0, 0.0], 5.0, 3).unwrap().value, 0.0);
        let v = mi_linear_gaussian(&[1.0], 7.0, 7).unwrap().value;
        assert!((v - 0.5 * LN_2).abs() < 1e-15);
    }
}
