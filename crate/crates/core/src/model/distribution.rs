use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const PMF_TOL: f64 = 1e-12;

/// Law of each variable `X_n`, shared IID across all `N` columns and `T` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableDistribution {
    Bernoulli { p: f64 },
    /// Zero-mean Gaussian.
    Gaussian { variance: f64 },
    TabularDiscrete { values: Vec<f64>, pmf: Vec<f64> },
}

impl VariableDistribution {
    pub fn bernoulli(p: f64) -> Result<Self> {
        let d = Self::Bernoulli { p };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        let d = Self::Gaussian { variance };
        d.validate()?;
        Ok(d)
    }

    pub fn tabular(values: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        let d = Self::TabularDiscrete { values, pmf };
        d.validate()?;
        Ok(d)
    }

    /// Column law of the normalised linear model: variance `1/T`.
    pub fn for_linear_model(n_samples: usize) -> Self {
        Self::Gaussian {
            variance: 1.0 / n_samples as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParameter(format!("Bernoulli p = {p} not in [0,1]")));
                }
            }
            Self::Gaussian { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "Gaussian variance must be positive, got {variance}"
                    )));
                }
            }
            Self::TabularDiscrete { values, pmf } => {
                if values.is_empty() || values.len() != pmf.len() {
                    return Err(Error::InvalidParameter(
                        "tabular distribution needs matching nonempty values and pmf".into(),
                    ));
                }
                if pmf.iter().any(|m| !(*m >= 0.0)) {
                    return Err(Error::InvalidParameter("pmf masses must be >= 0".into()));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > PMF_TOL {
                    return Err(Error::InvalidParameter(format!("pmf sums to {total}, not 1")));
                }
                for (a, v) in values.iter().enumerate() {
                    if values[..a].contains(v) {
                        return Err(Error::InvalidParameter(format!("duplicate alphabet value {v}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, Self::Gaussian { .. })
    }

    /// `(value, mass)` pairs for discrete laws, `None` for continuous ones.
    pub fn alphabet(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Bernoulli { p } => Some(vec![(0.0, 1.0 - p), (1.0, *p)]),
            Self::Gaussian { .. } => None,
            Self::TabularDiscrete { values, pmf } => {
                Some(values.iter().copied().zip(pmf.iter().copied()).collect())
            }
        }
    }

    /// Variance of a zero-mean Gaussian law.
    pub fn gaussian_variance(&self) -> Option<f64> {
        match self {
            Self::Gaussian { variance } => Some(*variance),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Gaussian { variance } => Normal::new(0.0, variance.sqrt())
                .expect("validated variance")
                .sample(rng),
            Self::TabularDiscrete { values, pmf } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, m) in values.iter().zip(pmf) {
                    acc += m;
                    if u < acc {
                        return *v;
                    }
                }
                // Round-off tail: last symbol with positive mass.
                values
                    .iter()
                    .zip(pmf)
                    .rev()
                    .find(|(_, m)| **m > 0.0)
                    .map(|(v, _)| *v)
                    .unwrap_or(values[0])
            }
        }
    }

    /// Law of an `r`-tuple of IID copies, as a tabular law over labels
    /// `0..|X|^r` (mixed radix, first copy least significant).
    pub fn power(&self, r: usize) -> Result<Self> {
        let alphabet = self
            .alphabet()
            .ok_or(Error::ContinuousAlphabet("variable distribution"))?;
        let card = alphabet.len();
        let total = card.pow(r as u32);
        let mut pmf = vec![1.0; total];
        for (code, mass) in pmf.iter_mut().enumerate() {
            let mut c = code;
            for _ in 0..r {
                *mass *= alphabet[c % card].1;
                c /= card;
            }
        }
        Self::tabular((0..total).map(|v| v as f64).collect(), pmf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(VariableDistribution::bernoulli(1.2).is_err());
        assert!(VariableDistribution::gaussian(0.0).is_err());
        assert!(VariableDistribution::tabular(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(VariableDistribution::tabular(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(VariableDistribution::tabular(vec![0.0, 1.0, 2.0], vec![0.2, 0.3, 0.5]).is_ok());
    }

    #[test]
    fn power_law_masses() {
        let q = VariableDistribution::bernoulli(0.25).unwrap();
        let q2 = q.power(2).unwrap();
        let a = q2.alphabet().unwrap();
        assert_eq!(a.len(), 4);
        assert!((a[0].1 - 0.5625).abs() < 1e-15);
        assert!((a[3].1 - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn tabular_sampling_frequencies() {
        let q = VariableDistribution::tabular(vec![-1.0, 0.0, 1.0], vec![0.2, 0.3, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let ones = (0..n).filter(|_| q.sample(&mut rng) == 1.0).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 0.01);
    }
}
