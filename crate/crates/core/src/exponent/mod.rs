//! Gallager-type error exponent `E_o(ρ, β)`, its worst-case lower bound, curvature
//! bounds and the `ρ` optimisation behind the finite-size error bound.

mod curvature;
mod curve;
mod optimize;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::info::BetaRef;
use crate::model::{ChannelTable, ObservationModel, ProblemDims, SupportPartition, VariableDistribution};
use crate::numeric::{converge_by_doubling, log_normal_cdf, LogSumExp};

pub use curvature::{eo_second_derivative_bound, CurvatureBound};
pub use curve::{exponent_curve, ExponentCurve, MIN_CURVE_POINTS};
pub use optimize::{maximize_concave, optimize_rho, RhoOptimum, RHO_TOL};

/// Agreement demanded of successive probit quadrature orders.
pub const EXPONENT_QUADRATURE_TOL: f64 = 1e-10;

/// `-log Σ_{r,y} Q(x_R) [Σ_u Q(x_U) p(y|x)^{1/(1+ρ)}]^{1+ρ}` on an enumerated channel,
/// for any `ρ > -1`. Zero-probability cells contribute exactly nothing.
pub fn eo_from_table(table: &ChannelTable, partition: &SupportPartition, rho: f64) -> Result<f64> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let codes = table.partition(partition)?;
    let nu = codes.q_unknown.len();
    let s = 1.0 / (1.0 + rho);
    let log_qu: Vec<f64> = codes.q_unknown.iter().map(|q| q.ln()).collect();
    let mut outer = LogSumExp::new();
    for (r, &qr) in codes.q_revealed.iter().enumerate() {
        if qr == 0.0 {
            continue;
        }
        let block = &codes.full[r * nu..(r + 1) * nu];
        for y in 0..table.y_card() {
            let mut inner = LogSumExp::new();
            for (&c, &lq) in block.iter().zip(&log_qu) {
                let p = table.row(c)[y];
                if p > 0.0 && lq > f64::NEG_INFINITY {
                    inner.add(lq + s * p.ln());
                }
            }
            let v = inner.value();
            if v > f64::NEG_INFINITY {
                outer.add(qr.ln() + (1.0 + rho) * v);
            }
        }
    }
    Ok(-outer.value())
}

/// Closed form for Gaussian variables of variance `var_q` and noise variance `1/snr`:
/// `(ρ/2) log(1 + var_q ‖β_U‖² snr / (1+ρ))`.
pub fn eo_linear_gaussian(norm_sq_unknown: f64, var_q: f64, snr: f64, rho: f64) -> f64 {
    0.5 * rho * (var_q * norm_sq_unknown * snr / (1.0 + rho)).ln_1p()
}

/// Probit channel with `Z_U ~ N(0, v_unknown)`, `Z_R ~ N(0, v_revealed)` by nested Gauss–Hermite.
pub fn eo_probit(v_unknown: f64, v_revealed: f64, rho: f64) -> Result<f64> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let s = 1.0 / (1.0 + rho);
    let (value, disc, order) = converge_by_doubling(32, EXPONENT_QUADRATURE_TOL, |gh| {
        let sd1 = v_unknown.max(0.0).sqrt();
        let sd2 = v_revealed.max(0.0).sqrt();
        let outer_nodes: Vec<(f64, f64)> = if sd2 == 0.0 {
            vec![(0.0, 0.0)]
        } else {
            gh.nodes.iter().zip(&gh.weights).map(|(z, w)| (sd2 * z, w.ln())).collect()
        };
        let inner_nodes: Vec<(f64, f64)> = if sd1 == 0.0 {
            vec![(0.0, 0.0)]
        } else {
            gh.nodes.iter().zip(&gh.weights).map(|(z, w)| (sd1 * z, w.ln())).collect()
        };
        let mut outer = LogSumExp::new();
        for &(z2, lw2) in &outer_nodes {
            if lw2 == f64::NEG_INFINITY {
                continue;
            }
            for sign in [1.0, -1.0] {
                let mut inner = LogSumExp::new();
                for &(z1, lw1) in &inner_nodes {
                    inner.add(lw1 + s * log_normal_cdf(sign * (z1 + z2)));
                }
                outer.add(lw2 + (1.0 + rho) * inner.value());
            }
        }
        -outer.value()
    });
    if disc > EXPONENT_QUADRATURE_TOL {
        return Err(Error::QuadratureNotConverged {
            discrepancy: disc,
            order,
        });
    }
    Ok(value)
}

/// `E_o(ρ, β)` for `ρ > -1` (negative values serve finite-difference diagnostics).
pub fn eo_single_letter_extended(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: &[f64],
    partition: &SupportPartition,
    rho: f64,
) -> Result<f64> {
    if !(rho > -1.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("need rho > -1, got {rho}")));
    }
    if beta.len() != partition.k() {
        return Err(Error::InvalidParameter("coefficient length mismatch".into()));
    }
    let norm = |pos: &[usize]| pos.iter().map(|&p| beta[p] * beta[p]).sum::<f64>();
    match (model, q) {
        (ObservationModel::LinearGaussian { snr }, VariableDistribution::Gaussian { variance }) => {
            Ok(eo_linear_gaussian(norm(partition.unknown()), *variance, *snr, rho))
        }
        (ObservationModel::LinearGaussian { .. }, _) => Err(Error::IncompatibleAlphabet(
            "the linear model needs Gaussian variables".into(),
        )),
        (ObservationModel::Probit, VariableDistribution::Gaussian { variance }) => eo_probit(
            variance * norm(partition.unknown()),
            variance * norm(partition.revealed()),
            rho,
        ),
        _ => eo_from_table(&ChannelTable::build(model, q, beta)?, partition, rho),
    }
}

/// Single-letter exponent `E_o(ρ, β)` for `0 <= ρ <= 1`.
pub fn eo_single_letter(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: &[f64],
    partition: &SupportPartition,
    rho: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("need 0 <= rho <= 1, got {rho}")));
    }
    eo_single_letter_extended(model, q, beta, partition, rho)
}

/// Worst-case lower bound `-ρK/(T p_min) + min_b E_o(ρ, b)` over the prior's support.
pub fn eo_lower_bound(
    model: &ObservationModel,
    q: &VariableDistribution,
    prior: &crate::model::BetaPrior,
    partition: &SupportPartition,
    rho: f64,
    dims: &ProblemDims,
) -> Result<f64> {
    let k = dims.k_sparse;
    let p_min = prior.p_min().ok_or_else(|| {
        Error::Unsupported("the exponent lower bound needs a prior with a minimum mass (fixed or discrete)".into())
    })?;
    let all = prior.enumerate(k)?.expect("priors with p_min enumerate");
    let mut best = f64::INFINITY;
    for (b, _) in &all {
        best = best.min(eo_single_letter(model, q, b, partition, rho)?);
    }
    Ok(-rho * k as f64 / (dims.n_samples as f64 * p_min) + best)
}

/// Exponent source for the finite-size bound: exact single-letter `E_o` when the
/// coefficients are known (or absent), the worst-case lower bound otherwise.
#[derive(Debug, Clone)]
pub struct ExponentEvaluator {
    model: ObservationModel,
    q: VariableDistribution,
    candidates: Vec<Vec<f64>>,
    /// `K / p_min` for random coefficients.
    penalty: Option<f64>,
    tables: Option<Vec<Arc<ChannelTable>>>,
}

impl ExponentEvaluator {
    pub fn new<'a>(
        model: &ObservationModel,
        q: &VariableDistribution,
        beta: impl Into<BetaRef<'a>>,
        k: usize,
    ) -> Result<Self> {
        model.check_compatible(k, q)?;
        let (candidates, penalty) = match beta.into() {
            BetaRef::Vector(b) => {
                if b.len() != k {
                    return Err(Error::InvalidParameter("coefficient length mismatch".into()));
                }
                model.check_beta(b)?;
                (vec![b.to_vec()], None)
            }
            BetaRef::Prior(prior) => {
                prior.validate(k)?;
                match prior.enumerate(k)? {
                    _ if !model.uses_beta() => (vec![prior.representative(k)], None),
                    Some(all) if all.len() == 1 => (vec![all[0].0.clone()], None),
                    Some(all) => (
                        all.into_iter().map(|(b, _)| b).collect(),
                        Some(k as f64 / prior.p_min().expect("discrete prior")),
                    ),
                    None => {
                        return Err(Error::Unsupported(
                            "finite-size exponents need a fixed or discrete prior".into(),
                        ))
                    }
                }
            }
        };
        Self {
            model: model.clone(),
            q: q.clone(),
            candidates,
            penalty,
            tables: None,
        }
        .with_tables()
    }

    fn with_tables(mut self) -> Result<Self> {
        self.tables = if self.q.is_discrete() {
            Some(
                self.candidates
                    .iter()
                    .map(|b| ChannelTable::build(&self.model, &self.q, b).map(Arc::new))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(self)
    }

    pub fn model(&self) -> &ObservationModel {
        &self.model
    }

    pub fn variables(&self) -> &VariableDistribution {
        &self.q
    }

    /// Replace the variable law (the linear model's column variance tracks `T`).
    pub fn with_variables(&self, q: VariableDistribution) -> Result<Self> {
        self.model.check_compatible(self.candidates[0].len(), &q)?;
        Self {
            q,
            tables: None,
            ..self.clone()
        }
        .with_tables()
    }

    /// Whether a coefficient penalty applies.
    pub fn is_random(&self) -> bool {
        self.penalty.is_some()
    }

    /// The exponent used at sample size `t` for the given partition.
    pub fn eo(&self, partition: &SupportPartition, rho: f64, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("need 0 <= rho <= 1, got {rho}")));
        }
        let mut best = f64::INFINITY;
        for (j, b) in self.candidates.iter().enumerate() {
            let v = match &self.tables {
                Some(tables) => eo_from_table(&tables[j], partition, rho)?,
                None => eo_single_letter(&self.model, &self.q, b, partition, rho)?,
            };
            best = best.min(v);
        }
        Ok(match self.penalty {
            Some(kp) if t > 0.0 => best - rho * kp / t,
            _ => best,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::GaussHermite;
    use std::f64::consts::LN_2;

    fn part(k: usize, i: usize) -> SupportPartition {
        SupportPartition::leading(k, i).unwrap()
    }

    #[test]
    fn fair_bit_exponent_at_one() {
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let v = eo_single_letter(&ObservationModel::GroupTesting, &q, &[1.0], &part(1, 1), 1.0).unwrap();
        assert!((v - LN_2).abs() < 1e-15);
        let z = eo_single_letter(&ObservationModel::GroupTesting, &q, &[1.0], &part(1, 1), 0.0).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn linear_closed_form_matches_quadrature() {
        // Trapezoid rule over the outcome, Gauss–Hermite over the unknown projection.
        let (v1, sigma2, rho): (f64, f64, f64) = (0.7, 0.5, 0.6);
        let s = 1.0 / (1.0 + rho);
        let gh = GaussHermite::new(64);
        let (lo, step, n) = (-15.0, 0.005, 6001);
        let mut total = 0.0;
        for j in 0..n {
            let y = lo + step * j as f64;
            let inner = gh.expect(v1, |a| (crate::numeric::log_normal_pdf(y, a, sigma2) * s).exp());
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            total += w * step * inner.powf(1.0 + rho);
        }
        let expected = -total.ln();
        let got = eo_linear_gaussian(v1, 1.0, 1.0 / sigma2, rho);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn lower_bound_penalty() {
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let dims = ProblemDims::new(10, 2, 20).unwrap();
        let prior = crate::model::BetaPrior::random_sign(1.0);
        let p = part(2, 1);
        let rho = 0.5;
        let lb = eo_lower_bound(&ObservationModel::Probit, &q, &prior, &p, rho, &dims).unwrap();
        let mut best = f64::INFINITY;
        for b in crate::model::sign_grid(2, 1.0) {
            best = best.min(eo_single_letter(&ObservationModel::Probit, &q, &b, &p, rho).unwrap());
        }
        assert!((lb - (best - 2.0 * rho * 2.0 / 20.0)).abs() < 1e-15);
        assert_eq!(eo_lower_bound(&ObservationModel::Probit, &q, &prior, &p, 0.0, &dims).unwrap(), 0.0);
    }
}
