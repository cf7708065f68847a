use rayon::prelude::*;

use super::closed::{mi_group_testing, mi_linear_gaussian_from_norm};
use super::exact::{mi_discrete_exact, mi_missing};
use super::probit::mi_probit_variances;
use super::MIEstimate;
use crate::error::{Error, Result};
use crate::model::{sign_grid, BetaPrior, ObservationModel, SupportPartition, VariableDistribution};

const DEFAULT_QUADRATURE_ORDER: usize = 64;

/// Conditional MI for one coefficient vector by the most direct available method:
/// closed forms for group testing and the Gaussian linear model, quadrature for
/// probit with Gaussian variables, exact enumeration otherwise.
pub fn mi_for_beta(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: &[f64],
    partition: &SupportPartition,
) -> Result<MIEstimate> {
    if beta.len() != partition.k() {
        return Err(Error::InvalidParameter("coefficient length mismatch".into()));
    }
    let i = partition.size();
    let norm = |pos: &[usize]| pos.iter().map(|&p| beta[p] * beta[p]).sum::<f64>();
    match (model, q) {
        (ObservationModel::Missing { .. }, _) => mi_missing(model, q, beta, partition),
        (ObservationModel::GroupTesting, VariableDistribution::Bernoulli { p }) if *p > 0.0 && *p < 1.0 => {
            mi_group_testing(*p, i, partition.k())
        }
        (ObservationModel::LinearGaussian { snr }, VariableDistribution::Gaussian { variance }) => {
            Ok(mi_linear_gaussian_from_norm(norm(partition.unknown()), *variance, *snr, i))
        }
        (ObservationModel::LinearGaussian { .. }, _) => Err(Error::IncompatibleAlphabet(
            "the linear model needs Gaussian variables".into(),
        )),
        (ObservationModel::Probit, VariableDistribution::Gaussian { variance }) => mi_probit_variances(
            variance * norm(partition.unknown()),
            variance * norm(partition.revealed()),
            DEFAULT_QUADRATURE_ORDER,
            i,
        ),
        _ => mi_discrete_exact(model, q, beta, partition),
    }
}

/// Minimum MI over a finite candidate set, with the minimiser. Ties go to the
/// lexicographically smaller candidate; a zero minimum is reported as an error.
pub fn mi_worst_case(
    model: &ObservationModel,
    q: &VariableDistribution,
    candidates: &[Vec<f64>],
    partition: &SupportPartition,
) -> Result<(MIEstimate, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("worst case needs at least one candidate".into()));
    }
    let values = candidates
        .par_iter()
        .map(|b| mi_for_beta(model, q, b, partition))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for j in 1..values.len() {
        let (a, b) = (values[j].value, values[best].value);
        let smaller_vec = candidates[j]
            .iter()
            .zip(&candidates[best])
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .is_some_and(|o| o.is_lt());
        if a < b || (a == b && smaller_vec) {
            best = j;
        }
    }
    let est = values[best];
    if est.is_zero() {
        return Err(Error::ZeroInformation {
            i: partition.size(),
        });
    }
    Ok((est, candidates[best].clone()))
}

/// Candidate coefficient vectors for the worst case: the prior's support, or
/// `{±b_min}^K` for a Gaussian prior with a magnitude floor.
pub fn beta_candidates(model: &ObservationModel, prior: &BetaPrior, k: usize) -> Result<Vec<Vec<f64>>> {
    prior.validate(k)?;
    if !model.uses_beta() {
        return Ok(vec![prior.representative(k)]);
    }
    match prior {
        BetaPrior::GaussianFloor { b_min, .. } => Ok(sign_grid(k, *b_min)),
        _ => Ok(prior
            .enumerate(k)?
            .expect("discrete priors enumerate")
            .into_iter()
            .map(|(b, _)| b)
            .collect()),
    }
}

/// Prior-averaged MI `Σ_b P(b) I_b` for fixed or discrete priors.
pub fn mi_averaged(
    model: &ObservationModel,
    q: &VariableDistribution,
    prior: &BetaPrior,
    partition: &SupportPartition,
) -> Result<MIEstimate> {
    let k = partition.k();
    prior.validate(k)?;
    if !model.uses_beta() {
        return mi_for_beta(model, q, &prior.representative(k), partition);
    }
    let all = prior.enumerate(k)?.ok_or_else(|| {
        Error::Unsupported("prior-averaged MI needs a fixed or discrete prior; use mi_monte_carlo".into())
    })?;
    let parts = all
        .par_iter()
        .map(|(b, m)| Ok((*m, mi_for_beta(model, q, b, partition)?)))
        .collect::<Result<Vec<_>>>()?;
    let method = parts[0].1.method;
    let value = parts.iter().map(|(m, e)| m * e.value).sum();
    let se = parts.iter().map(|(m, e)| m * e.std_error).sum();
    Ok(MIEstimate::new(value, method, se, partition.size()))
}
