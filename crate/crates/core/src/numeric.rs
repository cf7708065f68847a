//! Small numerical kernels shared across the crate: stable log-domain sums,
//! binary entropy, log-binomials, the standard normal CDF, Gauss–Hermite
//! rules and the Wilson score interval.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use nalgebra::{DMatrix, SymmetricEigen};
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// `ln(sqrt(2π))`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Two-sided 95% normal quantile used by the Wilson interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Max-shifted `log Σ exp(v)`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Streaming accumulator for `log Σ exp(v)`.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.scaled += (v - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `x log x` with the convention `0 log 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    -xlogx(p) - xlogx(1.0 - p)
}

/// Natural log of the binomial coefficient `C(n, k)`.
///
/// Small `min(k, n-k)` uses an exact product of ratios; otherwise a log-gamma
/// difference. Both stay within ~1e-12 relative for `n` up to 1e6.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let m = k.min(n - k);
    if m == 0 {
        return 0.0;
    }
    if m <= 256 {
        let rest = (n - m) as f64;
        (1..=m).map(|j| (rest / j as f64).ln_1p()).sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `ln Φ(x)`, accurate in the far left tail where `Φ` underflows.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Asymptotic Mills-ratio expansion.
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - (-x).ln() - LN_SQRT_2PI + series.ln()
}

/// Log-density of `N(mean, variance)` at `x`.
#[inline]
pub fn log_normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * d * d / variance - 0.5 * variance.ln() - LN_SQRT_2PI
}

/// Gauss–Hermite rule normalised for expectations under the standard normal:
/// `E[f(Z)] ≈ Σ weights[j] f(nodes[j])`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Largest supported order.
pub const GH_MAX_ORDER: usize = 256;

impl GaussHermite {
    /// Build an `n`-point rule by the Golub–Welsch eigen-decomposition of the
    /// Jacobi matrix of the probabilists' Hermite polynomials.
    pub fn new(n: usize) -> Self {
        assert!((1..=GH_MAX_ORDER).contains(&n), "Gauss-Hermite order {n} out of range");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrise to remove eigen-solver round-off.
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for j in 0..n {
            let (a, wa) = pairs[j];
            let (b, wb) = pairs[n - 1 - j];
            nodes[j] = 0.5 * (a - b);
            weights[j] = 0.5 * (wa + wb);
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Self { nodes, weights }
    }

    /// Shared, lazily built rule of order `n`.
    pub fn cached(n: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussHermite::new(n)))
            .clone()
    }

    /// `E[f(Z)]` for `Z ~ N(0, variance)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, variance: f64, mut f: F) -> f64 {
        if variance <= 0.0 {
            return f(0.0);
        }
        let sd = variance.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w * f(sd * z))
            .sum()
    }
}

/// Evaluate `integral(order)` at successively doubled orders until two
/// consecutive values agree within `tol`. Returns `(value, discrepancy, order)`.
pub fn converge_by_doubling<F>(start_order: usize, tol: f64, mut integral: F) -> (f64, f64, usize)
where
    F: FnMut(&GaussHermite) -> f64,
{
    let mut order = start_order.clamp(1, GH_MAX_ORDER / 2);
    let mut prev = integral(&GaussHermite::cached(order));
    let mut discrepancy = f64::INFINITY;
    while order * 2 <= GH_MAX_ORDER {
        order *= 2;
        let next = integral(&GaussHermite::cached(order));
        discrepancy = (next - prev).abs();
        prev = next;
        if discrepancy <= tol {
            break;
        }
    }
    (prev, discrepancy, order)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of a parent `seed`; independent of call order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Convert nats to bits.
pub fn nats_to_bits(v: f64) -> f64 {
    v / LN_2
}
