use serde::{Deserialize, Serialize};

use super::ExponentEvaluator;
use crate::error::Result;
use crate::model::{ProblemDims, SupportPartition};
use crate::numeric::log_binomial;

/// Absolute tolerance on the maximising `ρ`.
pub const RHO_TOL: f64 = 1e-6;

const CHECK_POINTS: usize = 9;
const GRID_POINTS: usize = 33;
const CONCAVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoOptimum {
    pub rho: f64,
    pub objective: f64,
    /// The concavity check failed and a grid search was used.
    pub grid_fallback: bool,
}

fn golden<F: FnMut(f64) -> Result<f64>>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Maximise a function on `[0, 1]` expected to be concave: golden section plus both
/// endpoints, or a 33-point grid refined locally if a chord test on 9 points fails.
pub fn maximize_concave<F: FnMut(f64) -> Result<f64>>(mut f: F, tol: f64) -> Result<RhoOptimum> {
    let xs: Vec<f64> = (0..CHECK_POINTS).map(|j| j as f64 / (CHECK_POINTS - 1) as f64).collect();
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let concave = ys.windows(3).all(|w| {
        let scale = w.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        w[1] >= 0.5 * (w[0] + w[2]) - CONCAVITY_TOL * scale
    });
    let mut best = (0.0, ys[0]);
    if ys[CHECK_POINTS - 1] > best.1 {
        best = (1.0, ys[CHECK_POINTS - 1]);
    }
    let (lo, hi) = if concave {
        (0.0, 1.0)
    } else {
        let mut g = best;
        let step = 1.0 / (GRID_POINTS - 1) as f64;
        for j in 0..GRID_POINTS {
            let x = j as f64 * step;
            let y = f(x)?;
            if y > g.1 {
                g = (x, y);
            }
        }
        best = g;
        ((g.0 - step).max(0.0), (g.0 + step).min(1.0))
    };
    let (x, y) = golden(&mut f, lo, hi, tol)?;
    if y > best.1 {
        best = (x, y);
    }
    Ok(RhoOptimum {
        rho: best.0,
        objective: best.1,
        grid_fallback: !concave,
    })
}

/// Maximise `T E_o(ρ) - ρ log C(N-K, i) - log C(K, i)` over `ρ ∈ [0, 1]`.
pub fn optimize_rho(eval: &ExponentEvaluator, partition: &SupportPartition, dims: &ProblemDims) -> Result<RhoOptimum> {
    optimize_rho_at(eval, partition, dims, dims.n_samples as f64)
}

pub(crate) fn optimize_rho_at(
    eval: &ExponentEvaluator,
    partition: &SupportPartition,
    dims: &ProblemDims,
    t: f64,
) -> Result<RhoOptimum> {
    let (n, k, i) = (dims.n_vars as u64, dims.k_sparse as u64, partition.size() as u64);
    let lc_out = log_binomial(n - k, i);
    let lc_in = log_binomial(k, i);
    if t == 0.0 {
        return Ok(RhoOptimum {
            rho: 0.0,
            objective: -lc_in,
            grid_fallback: false,
        });
    }
    maximize_concave(|rho| Ok(t * eval.eo(partition, rho, t)? - rho * lc_out - lc_in), RHO_TOL)
}
