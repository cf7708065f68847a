//! Conditional mutual information `I(X_U; Y | X_R, β)` for a partition of the
//! support into unknown (`U`) and revealed (`R`) positions.

mod closed;
mod exact;
mod monte_carlo;
mod probit;
mod worst;

use serde::{Deserialize, Serialize};

use crate::model::BetaPrior;

pub use closed::{mi_group_testing, mi_linear_gaussian, mi_linear_gaussian_from_norm, mi_linear_jensen_bound};
pub use exact::{mi_discrete_exact, mi_from_table, mi_missing};
pub use monte_carlo::{mi_monte_carlo, MC_BLOCKS, MC_MIN_SAMPLES};
pub use probit::{
    mi_probit, mi_probit_variances, probit_entropy_bounds, ProbitEntropyCheck, PROBIT_QUADRATURE_TOL,
};
pub use worst::{beta_candidates, mi_averaged, mi_for_beta, mi_worst_case};

/// Values within this distance of zero are treated as zero information.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethod {
    Exact,
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// A mutual-information value in nats with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MIEstimate {
    pub value: f64,
    pub method: MiMethod,
    pub std_error: f64,
    pub partition_size_i: usize,
}

impl MIEstimate {
    /// Build an estimate, clamping round-off negatives to zero.
    pub fn new(value: f64, method: MiMethod, std_error: f64, partition_size_i: usize) -> Self {
        let value = if value < 0.0 && value >= -ZERO_TOL { 0.0 } else { value };
        let std_error = match method {
            MiMethod::Exact | MiMethod::ClosedForm => 0.0,
            _ => std_error,
        };
        Self {
            value,
            method,
            std_error,
            partition_size_i,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value <= ZERO_TOL
    }

    /// Scale the value (and error) by a positive factor, e.g. for `R` independent replicas.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error * factor,
            ..*self
        }
    }
}

/// Conditioning coefficients: a single vector or a prior to average over.
#[derive(Debug, Clone, Copy)]
pub enum BetaRef<'a> {
    Vector(&'a [f64]),
    Prior(&'a BetaPrior),
}

impl<'a> From<&'a [f64]> for BetaRef<'a> {
    fn from(v: &'a [f64]) -> Self {
        BetaRef::Vector(v)
    }
}

impl<'a> From<&'a Vec<f64>> for BetaRef<'a> {
    fn from(v: &'a Vec<f64>) -> Self {
        BetaRef::Vector(v)
    }
}

impl<'a> From<&'a BetaPrior> for BetaRef<'a> {
    fn from(p: &'a BetaPrior) -> Self {
        BetaRef::Prior(p)
    }
}
