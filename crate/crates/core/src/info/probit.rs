use serde::{Deserialize, Serialize};

use super::{MIEstimate, MiMethod};
use crate::error::{Error, Result};
use crate::numeric::{converge_by_doubling, normal_cdf, xlogx};

/// Order-doubling agreement required of probit quadratures.
pub const PROBIT_QUADRATURE_TOL: f64 = 1e-6;

/// `h_b(Φ(z))` computed from both tails so neither branch cancels.
fn binary_entropy_of_probit(z: f64) -> f64 {
    -xlogx(normal_cdf(z)) - xlogx(normal_cdf(-z))
}

/// `H(Y | Z_R)` and `H(Y | Z)` where `Z_U ~ N(0, v_unknown)`, `Z_R ~ N(0, v_revealed)`,
/// `Y = 1{Z_U + Z_R + W > 0}`, `W ~ N(0,1)`. Returns `(h_revealed, h_full, discrepancy)`.
fn probit_entropies(v_unknown: f64, v_revealed: f64, order: usize) -> Result<(f64, f64, f64)> {
    let scale = (1.0 + v_unknown).sqrt();
    let (h2, d2, o2) = converge_by_doubling(order, PROBIT_QUADRATURE_TOL, |gh| {
        gh.expect(v_revealed, |z| binary_entropy_of_probit(z / scale))
    });
    let (h, d, o) = converge_by_doubling(order, PROBIT_QUADRATURE_TOL, |gh| {
        gh.expect(v_unknown + v_revealed, binary_entropy_of_probit)
    });
    let discrepancy = d2.max(d);
    if discrepancy > PROBIT_QUADRATURE_TOL {
        return Err(Error::QuadratureNotConverged {
            discrepancy,
            order: o2.max(o),
        });
    }
    Ok((h2, h, discrepancy))
}

/// Probit MI for general projected variances `v_U = var_q ‖β_U‖²`, `v_R = var_q ‖β_R‖²`.
pub fn mi_probit_variances(v_unknown: f64, v_revealed: f64, order: usize, i: usize) -> Result<MIEstimate> {
    if order < 16 {
        return Err(Error::InvalidParameter(format!("quadrature order must be >= 16, got {order}")));
    }
    if !(v_unknown >= 0.0) || !(v_revealed >= 0.0) {
        return Err(Error::InvalidParameter("variances must be nonnegative".into()));
    }
    let (h2, h, disc) = probit_entropies(v_unknown, v_revealed, order)?;
    Ok(MIEstimate::new(h2 - h, MiMethod::Quadrature, disc, i))
}

/// Unit-variance variables and unit coefficients: `Z_R ~ N(0, K-i)`, `Z ~ N(0, K)`.
pub fn mi_probit(i: usize, k: usize, order: usize) -> Result<MIEstimate> {
    if i == 0 || i > k {
        return Err(Error::InvalidParameter(format!("need 1 <= i <= K, got i = {i}, K = {k}")));
    }
    mi_probit_variances(i as f64, (k - i) as f64, order, i)
}

/// Quadrature entropies next to the closed-form bounds obtained from the
/// Q-function inequalities `e^{-x²}/12 <= Q(x) <= e^{-x²/2}/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbitEntropyCheck {
    pub i: usize,
    pub k: usize,
    pub h_given_revealed: f64,
    pub h_given_all: f64,
    pub mutual_information: f64,
    pub h_revealed_lower: f64,
    pub h_all_upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub mi_above_bound_difference: bool,
}

/// Evaluate the analytic bounds
/// `H(Y|Z_R) >= ln2 / (12 √A D) + 1 / (24 A^{3/2} D S²)` (`A = 1/D² + 2/S²`, `D² = K-i`, `S² = i+1`)
/// and `H(Y|Z) <= ln12 / √(BK) + 1 / (2 √K B^{3/2})` (`B = 1/K + 1`) against quadrature.
pub fn probit_entropy_bounds(i: usize, k: usize, order: usize) -> Result<ProbitEntropyCheck> {
    if i == 0 || i > k {
        return Err(Error::InvalidParameter(format!("need 1 <= i <= K, got i = {i}, K = {k}")));
    }
    let (h2, h, _) = probit_entropies(i as f64, (k - i) as f64, order.max(16))?;
    let s2 = (i + 1) as f64;
    let d2 = (k - i) as f64;
    let h_lower = if d2 == 0.0 {
        std::f64::consts::LN_2 / 12.0
    } else {
        let d = d2.sqrt();
        let a = 1.0 / d2 + 2.0 / s2;
        std::f64::consts::LN_2 / (12.0 * a.sqrt() * d) + 1.0 / (24.0 * a.powf(1.5) * d * s2)
    };
    let kf = k as f64;
    let b = 1.0 / kf + 1.0;
    let h_upper = 12f64.ln() / (b * kf).sqrt() + 1.0 / (2.0 * kf.sqrt() * b.powf(1.5));
    let mi = h2 - h;
    Ok(ProbitEntropyCheck {
        i,
        k,
        h_given_revealed: h2,
        h_given_all: h,
        mutual_information: mi,
        h_revealed_lower: h_lower,
        h_all_upper: h_upper,
        lower_holds: h2 >= h_lower,
        upper_holds: h <= h_upper,
        mi_above_bound_difference: mi >= h_lower - h_upper,
    })
}
