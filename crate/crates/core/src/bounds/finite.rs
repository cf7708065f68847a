use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{maximize_concave, ExponentEvaluator, RHO_TOL};
use crate::info::BetaRef;
use crate::model::{ObservationModel, ProblemDims, SupportPartition, VariableDistribution};
use crate::numeric::log_binomial;

/// How `ρ` is chosen for each per-`i` exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoStrategy {
    Optimize,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerIBound {
    pub i: usize,
    pub rho: f64,
    /// `T E_o(ρ) - ρ log C(N-K, i) - log C(K, i)`.
    pub objective: f64,
    /// `min(1, exp(-objective))`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeBound {
    pub n_samples: usize,
    pub per_i: Vec<PerIBound>,
    /// `min(1, Σ_i bound_i)`.
    pub union_bound: f64,
}

/// Evaluates the union bound `Σ_i exp(-(T E_o(ρ) - ρ log C(N-K,i) - log C(K,i)))`
/// at any sample size for fixed `N`, `K` and model.
///
/// For the linear model the variable variance is `1/T`, so the exponent is
/// rebuilt at each `T`.
#[derive(Debug, Clone)]
pub struct FiniteSizeAnalyzer {
    eval: ExponentEvaluator,
    dims: ProblemDims,
    strategy: RhoStrategy,
    linear_columns: bool,
}

impl FiniteSizeAnalyzer {
    pub fn new<'a>(
        dims: &ProblemDims,
        model: &ObservationModel,
        q: &VariableDistribution,
        beta: impl Into<BetaRef<'a>>,
        strategy: RhoStrategy,
    ) -> Result<Self> {
        if let RhoStrategy::Fixed(r) = strategy {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!("fixed rho must lie in [0, 1], got {r}")));
            }
        }
        let linear_columns = matches!(model, ObservationModel::LinearGaussian { .. });
        let q = if linear_columns {
            VariableDistribution::for_linear_model(dims.n_samples)
        } else {
            q.clone()
        };
        Ok(Self {
            eval: ExponentEvaluator::new(model, &q, beta, dims.k_sparse)?,
            dims: *dims,
            strategy,
            linear_columns,
        })
    }

    pub fn dims(&self) -> &ProblemDims {
        &self.dims
    }

    fn per_i_at(&self, t: usize, i: usize) -> Result<PerIBound> {
        let (n, k) = (self.dims.n_vars as u64, self.dims.k_sparse as u64);
        let lc_out = log_binomial(n - k, i as u64);
        let lc_in = log_binomial(k, i as u64);
        let part = SupportPartition::leading(self.dims.k_sparse, i)?;
        let eval = if self.linear_columns && t > 0 {
            self.eval.with_variables(VariableDistribution::for_linear_model(t))?
        } else {
            self.eval.clone()
        };
        let tf = t as f64;
        let objective = |rho: f64| -> Result<f64> {
            if t == 0 {
                return Ok(-rho * lc_out - lc_in);
            }
            Ok(tf * eval.eo(&part, rho, tf)? - rho * lc_out - lc_in)
        };
        let (rho, obj) = match self.strategy {
            RhoStrategy::Fixed(r) => (r, objective(r)?),
            RhoStrategy::Optimize if t == 0 => (0.0, -lc_in),
            RhoStrategy::Optimize => {
                let o = maximize_concave(objective, RHO_TOL)?;
                (o.rho, o.objective)
            }
        };
        Ok(PerIBound {
            i,
            rho,
            objective: obj,
            bound: (-obj).exp().clamp(0.0, 1.0),
        })
    }

    /// Per-`i` bounds and their union at `T = t`.
    pub fn bound_at(&self, t: usize) -> Result<FiniteSizeBound> {
        let per_i = (1..=self.dims.k_sparse)
            .into_par_iter()
            .map(|i| self.per_i_at(t, i))
            .collect::<Result<Vec<_>>>()?;
        let union_bound = per_i.iter().map(|b| b.bound).sum::<f64>().min(1.0);
        Ok(FiniteSizeBound {
            n_samples: t,
            per_i,
            union_bound,
        })
    }

    /// Smallest `T` whose union bound is at most `target`.
    pub fn min_samples_for(&self, target: f64) -> Result<usize> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidParameter(format!("target must lie in (0, 1), got {target}")));
        }
        const T_MAX: usize = 1 << 40;
        let ok = |t: usize| -> Result<bool> { Ok(self.bound_at(t)?.union_bound <= target) };
        let mut hi = 1usize;
        while !ok(hi)? {
            if hi >= T_MAX {
                return Err(Error::NoFiniteThreshold(format!(
                    "union bound stays above {target} up to T = {T_MAX}"
                )));
            }
            hi *= 2;
        }
        let mut lo = hi / 2;
        if lo == 0 {
            return Ok(hi);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Finite-size union bound at `dims.n_samples`.
pub fn finite_size_error_bound<'a>(
    dims: &ProblemDims,
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: impl Into<BetaRef<'a>>,
    strategy: RhoStrategy,
) -> Result<FiniteSizeBound> {
    FiniteSizeAnalyzer::new(dims, model, q, beta, strategy)?.bound_at(dims.n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BetaPrior;

    #[test]
    fn two_item_case_is_power_of_two() {
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let d = ProblemDims::new(2, 1, 1).unwrap();
        let prior = BetaPrior::unit(1);
        let a = FiniteSizeAnalyzer::new(&d, &ObservationModel::GroupTesting, &q, &prior, RhoStrategy::Optimize).unwrap();
        for t in 1..=20 {
            let b = a.bound_at(t).unwrap();
            assert!((b.union_bound - 0.5f64.powi(t as i32)).abs() < 1e-12);
        }
        assert_eq!(a.bound_at(0).unwrap().union_bound, 1.0);
        assert_eq!(a.min_samples_for(0.01).unwrap(), 7);
    }

    #[test]
    fn nonincreasing_in_t() {
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let d = ProblemDims::new(10, 2, 1).unwrap();
        let a = FiniteSizeAnalyzer::new(&d, &ObservationModel::GroupTesting, &q, &BetaPrior::unit(2), RhoStrategy::Optimize)
            .unwrap();
        let mut prev = 1.0;
        for t in (0..60).step_by(3) {
            let u = a.bound_at(t).unwrap().union_bound;
            assert!(u <= prev + 1e-12);
            prev = u;
        }
        assert!(prev < 0.1);
    }
}
