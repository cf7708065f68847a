use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{BetaRef, MIEstimate, MiMethod};
use crate::error::{Error, Result};
use crate::model::{ObservationModel, SupportPartition, VariableDistribution};

/// Smallest accepted sample budget.
pub const MC_MIN_SAMPLES: usize = 10_000;
/// Number of independent streams; also the jackknife block count.
pub const MC_BLOCKS: usize = 100;

/// Monte-Carlo estimate of `I(X_U; Y | X_R, β)`.
///
/// Each draw samples `(β, x_S, y)` and scores `log p(y | x_S, β) - log p(y | x_R, β)`; the
/// second term marginalises the unknown coordinates with the model's masked likelihood.
/// Missing-data wrappers also draw erasures, giving `I(Z_U; Y | Z_R, β)`. The standard
/// error is a delete-one-block jackknife over [`MC_BLOCKS`] streams.
pub fn mi_monte_carlo<'a>(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: impl Into<BetaRef<'a>>,
    partition: &SupportPartition,
    n_samples: usize,
    seed: u64,
) -> Result<MIEstimate> {
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo MI needs at least {MC_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let k = partition.k();
    model.check_compatible(k, q)?;
    let beta = beta.into();
    match beta {
        BetaRef::Vector(b) => {
            if b.len() != k {
                return Err(Error::InvalidParameter("coefficient length mismatch".into()));
            }
            model.check_beta(b)?;
        }
        BetaRef::Prior(p) => p.validate(k)?,
    }
    let rho = model.miss_prob();
    let block_sums: Vec<(f64, usize)> = (0..MC_BLOCKS)
        .into_par_iter()
        .map(|blk| {
            let len = n_samples / MC_BLOCKS + usize::from(blk < n_samples % MC_BLOCKS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(blk as u64);
            let mut x = vec![0.0; k];
            let mut z: Vec<Option<f64>> = vec![None; k];
            let mut zr: Vec<Option<f64>> = vec![None; k];
            let mut sum = 0.0;
            for _ in 0..len {
                let b = match beta {
                    BetaRef::Vector(b) => b.to_vec(),
                    BetaRef::Prior(p) => p.sample(k, &mut rng),
                };
                for v in x.iter_mut() {
                    *v = q.sample(&mut rng);
                }
                let y = model.sample_outcome(&x, &b, &mut rng)?;
                for (zi, xi) in z.iter_mut().zip(&x) {
                    *zi = if rho > 0.0 && rng.random::<f64>() < rho { None } else { Some(*xi) };
                }
                zr.copy_from_slice(&z);
                for &u in partition.unknown() {
                    zr[u] = None;
                }
                let full = model.log_likelihood_masked(q, &z, &b, y)?;
                let marg = model.log_likelihood_masked(q, &zr, &b, y)?;
                sum += full - marg;
            }
            Ok((sum, len))
        })
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = block_sums.iter().map(|(s, _)| s).sum();
    let n = n_samples as f64;
    let mean = total / n;
    let b = MC_BLOCKS as f64;
    let loo: Vec<f64> = block_sums
        .iter()
        .map(|(s, len)| (total - s) / (n - *len as f64))
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / b;
    let var = (b - 1.0) / b * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>();
    Ok(MIEstimate::new(mean, MiMethod::MonteCarlo, var.sqrt(), partition.size()))
}
