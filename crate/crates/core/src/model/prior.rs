use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use super::distribution::PMF_TOL;
use crate::error::{Error, Result};
use crate::numeric::normal_cdf;

/// Cap on `|B|^K` when enumerating coefficient vectors.
pub const BETA_ENUMERATION_CAP: usize = 1_000_000;

/// Distribution of the latent support coefficients `β_S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaPrior {
    /// Known coefficients (a point mass).
    Fixed { values: Vec<f64> },
    /// Each coordinate IID over `points` with masses `pmf`.
    DiscreteIid { points: Vec<f64>, pmf: Vec<f64> },
    /// Each coordinate `N(0, variance)` conditioned on `|β| >= b_min`.
    GaussianFloor { variance: f64, b_min: f64 },
}

impl BetaPrior {
    pub fn fixed(values: Vec<f64>) -> Self {
        Self::Fixed { values }
    }

    /// All-ones coefficients; the natural choice for coefficient-free models.
    pub fn unit(k: usize) -> Self {
        Self::Fixed {
            values: vec![1.0; k],
        }
    }

    pub fn discrete(points: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        let p = Self::DiscreteIid { points, pmf };
        p.validate(1)?;
        Ok(p)
    }

    /// Uniform random sign times `magnitude`.
    pub fn random_sign(magnitude: f64) -> Self {
        Self::DiscreteIid {
            points: vec![-magnitude, magnitude],
            pmf: vec![0.5, 0.5],
        }
    }

    pub fn gaussian_floor(variance: f64, b_min: f64) -> Result<Self> {
        let p = Self::GaussianFloor { variance, b_min };
        p.validate(1)?;
        Ok(p)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            Self::Fixed { values } => {
                if values.len() != k {
                    return Err(Error::InvalidParameter(format!(
                        "fixed coefficients have length {}, expected K = {k}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("fixed coefficients must be finite".into()));
                }
            }
            Self::DiscreteIid { points, pmf } => {
                if points.is_empty() || points.len() != pmf.len() {
                    return Err(Error::InvalidParameter(
                        "discrete prior needs matching nonempty points and pmf".into(),
                    ));
                }
                if pmf.iter().any(|m| !(*m > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "discrete prior masses must be strictly positive on the support".into(),
                    ));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > PMF_TOL {
                    return Err(Error::InvalidParameter(format!("prior pmf sums to {total}")));
                }
            }
            Self::GaussianFloor { variance, b_min } => {
                if !(*variance > 0.0) || !(*b_min >= 0.0) || !variance.is_finite() || !b_min.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "GaussianFloor needs variance > 0 and b_min >= 0, got {variance}, {b_min}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest per-coordinate mass. Fixed priors report 1; continuous priors have none.
    pub fn p_min(&self) -> Option<f64> {
        match self {
            Self::Fixed { .. } => Some(1.0),
            Self::DiscreteIid { pmf, .. } => pmf.iter().copied().reduce(f64::min),
            Self::GaussianFloor { .. } => None,
        }
    }

    /// Enumerate `(β, P(β))` over `B^K`; `None` for continuous priors.
    pub fn enumerate(&self, k: usize) -> Result<Option<Vec<(Vec<f64>, f64)>>> {
        match self {
            Self::Fixed { values } => Ok(Some(vec![(values.clone(), 1.0)])),
            Self::DiscreteIid { points, pmf } => {
                let card = points.len();
                let total = (card as f64).powi(k as i32);
                if total > BETA_ENUMERATION_CAP as f64 {
                    return Err(Error::EnumerationCap {
                        size: total as u128,
                        cap: BETA_ENUMERATION_CAP as u128,
                    });
                }
                let total = total as usize;
                let mut out = Vec::with_capacity(total);
                for code in 0..total {
                    let mut c = code;
                    let mut beta = Vec::with_capacity(k);
                    let mut mass = 1.0;
                    for _ in 0..k {
                        beta.push(points[c % card]);
                        mass *= pmf[c % card];
                        c /= card;
                    }
                    out.push((beta, mass));
                }
                Ok(Some(out))
            }
            Self::GaussianFloor { .. } => Ok(None),
        }
    }

    /// A deterministic vector in the support of the prior, for coefficient-free models.
    pub fn representative(&self, k: usize) -> Vec<f64> {
        match self {
            Self::Fixed { values } => values.clone(),
            Self::DiscreteIid { points, .. } => vec![points[0]; k],
            Self::GaussianFloor { b_min, .. } => vec![b_min.max(1.0); k],
        }
    }

    /// Draw one coefficient vector of length `k`.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Fixed { values } => values.clone(),
            Self::DiscreteIid { points, pmf } => (0..k)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (b, m) in points.iter().zip(pmf) {
                        acc += m;
                        if u < acc {
                            return *b;
                        }
                    }
                    *points.last().expect("validated nonempty")
                })
                .collect(),
            Self::GaussianFloor { variance, b_min } => {
                let sd = variance.sqrt();
                if *b_min == 0.0 {
                    let normal = Normal::new(0.0, sd).expect("validated variance");
                    return (0..k).map(|_| normal.sample(rng)).collect();
                }
                // Inverse-CDF draw from the upper tail beyond b_min, random sign.
                let std = StatNormal::new(0.0, 1.0).expect("standard normal");
                let tail = normal_cdf(-b_min / sd);
                (0..k)
                    .map(|_| {
                        let u: f64 = rng.random::<f64>() * tail;
                        let mag = -sd * std.inverse_cdf(u.max(f64::MIN_POSITIVE));
                        let mag = mag.max(*b_min);
                        if rng.random::<bool>() {
                            mag
                        } else {
                            -mag
                        }
                    })
                    .collect()
            }
        }
    }
}

/// The candidate grid `{±b_min}^K` used for worst-case linear-model searches.
pub fn sign_grid(k: usize, b_min: f64) -> Vec<Vec<f64>> {
    (0..1usize << k)
        .map(|mask| {
            (0..k)
                .map(|j| if mask >> j & 1 == 1 { b_min } else { -b_min })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn p_min_by_variant() {
        assert_eq!(BetaPrior::unit(3).p_min(), Some(1.0));
        let d = BetaPrior::discrete(vec![1.0, 2.0, 3.0], vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(d.p_min(), Some(0.2));
        assert_eq!(BetaPrior::gaussian_floor(1.0, 0.5).unwrap().p_min(), None);
    }

    #[test]
    fn discrete_prior_requires_positive_masses() {
        assert!(BetaPrior::discrete(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn enumeration_masses_sum_to_one() {
        let d = BetaPrior::random_sign(1.0);
        let all = d.enumerate(3).unwrap().unwrap();
        assert_eq!(all.len(), 8);
        let total: f64 = all.iter().map(|(_, m)| m).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_floor_respects_magnitude_floor() {
        let p = BetaPrior::gaussian_floor(1.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..2000).flat_map(|_| p.sample(4, &mut rng)).collect();
        assert!(draws.iter().all(|b| b.abs() >= 1.5));
        let pos = draws.iter().filter(|b| **b > 0.0).count() as f64 / draws.len() as f64;
        assert!((pos - 0.5).abs() < 0.05);
    }

    #[test]
    fn sign_grid_covers_all_patterns() {
        let g = sign_grid(3, 2.0);
        assert_eq!(g.len(), 8);
        assert!(g.iter().all(|b| b.iter().all(|v| v.abs() == 2.0)));
    }
}
