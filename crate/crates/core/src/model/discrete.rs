use super::dims::SupportPartition;
use super::distribution::VariableDistribution;
use super::observation::{digits_into, ObservationModel};
use crate::error::{Error, Result};

/// Cap on `|X|^K · |Y|` for exact enumeration.
pub const CHANNEL_ENUMERATION_CAP: usize = 10_000_000;

/// Effective finite channel `x_S -> y` for one coefficient vector, with the
/// per-coordinate input masses. Missing wrappers are folded in by adjoining an
/// erasure symbol (the last alphabet index).
#[derive(Debug, Clone)]
pub struct ChannelTable {
    k: usize,
    q: Vec<f64>,
    y_card: usize,
    probs: Vec<f64>,
}

/// Flattened view of a channel split by a partition: `full[r * n_u + u]` is the
/// full input code for revealed code `r` and unknown code `u`.
#[derive(Debug, Clone)]
pub struct PartitionedCodes {
    pub q_revealed: Vec<f64>,
    pub q_unknown: Vec<f64>,
    pub full: Vec<usize>,
}

impl ChannelTable {
    pub fn build(model: &ObservationModel, q: &VariableDistribution, beta: &[f64]) -> Result<Self> {
        let k = beta.len();
        model.check_compatible(k, q)?;
        model.check_beta(beta)?;
        let alphabet = q.alphabet().ok_or(Error::ContinuousAlphabet("variable"))?;
        let y_card = model
            .y_cardinality()
            .ok_or(Error::ContinuousAlphabet("outcome"))?;
        let card = alphabet.len();
        let size = (card as f64).powi(k as i32) * y_card as f64;
        if size > CHANNEL_ENUMERATION_CAP as f64 {
            return Err(Error::EnumerationCap {
                size: size as u128,
                cap: CHANNEL_ENUMERATION_CAP as u128,
            });
        }
        let nx = card.pow(k as u32);
        let mut probs = Vec::with_capacity(nx * y_card);
        let mut digits = vec![0usize; k];
        let mut x = vec![0.0; k];
        for code in 0..nx {
            digits_into(code, card, &mut digits);
            for (xi, d) in x.iter_mut().zip(&digits) {
                *xi = alphabet[*d].0;
            }
            probs.extend(model.outcome_probs(&x, beta)?);
        }
        let table = Self {
            k,
            q: alphabet.iter().map(|(_, m)| *m).collect(),
            y_card,
            probs,
        };
        let rho = model.miss_prob();
        Ok(if matches!(model, ObservationModel::Missing { .. }) {
            table.with_erasures(rho)?
        } else {
            table
        })
    }

    /// Channel from the erased variables `Z` (alphabet `|X| + 1`, erasure last) to `Y`.
    pub fn with_erasures(&self, miss_prob: f64) -> Result<Self> {
        let card = self.q.len();
        let zc = card + 1;
        let nz = zc.pow(self.k as u32);
        if (nz * self.y_card) as f64 > CHANNEL_ENUMERATION_CAP as f64 {
            return Err(Error::EnumerationCap {
                size: (nz * self.y_card) as u128,
                cap: CHANNEL_ENUMERATION_CAP as u128,
            });
        }
        let mut q: Vec<f64> = self.q.iter().map(|m| m * (1.0 - miss_prob)).collect();
        q.push(miss_prob);
        let mut probs = vec![0.0; nz * self.y_card];
        let mut zd = vec![0usize; self.k];
        let mut xd = vec![0usize; self.k];
        let nx = self.n_inputs();
        for zcode in 0..nz {
            digits_into(zcode, zc, &mut zd);
            let out = &mut probs[zcode * self.y_card..(zcode + 1) * self.y_card];
            for xcode in 0..nx {
                digits_into(xcode, card, &mut xd);
                let mut w = 1.0;
                let mut consistent = true;
                for (z, x) in zd.iter().zip(&xd) {
                    if *z == card {
                        w *= self.q[*x];
                    } else if z != x {
                        consistent = false;
                        break;
                    }
                }
                if !consistent || w == 0.0 {
                    continue;
                }
                for (o, p) in out.iter_mut().zip(self.row(xcode)) {
                    *o += w * p;
                }
            }
        }
        Ok(Self {
            k: self.k,
            q,
            y_card: self.y_card,
            probs,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    pub fn input_masses(&self) -> &[f64] {
        &self.q
    }

    pub fn n_inputs(&self) -> usize {
        self.q.len().pow(self.k as u32)
    }

    pub fn row(&self, code: usize) -> &[f64] {
        &self.probs[code * self.y_card..(code + 1) * self.y_card]
    }

    /// Joint masses of `n` IID coordinates, indexed by mixed-radix code.
    fn masses_for(&self, n: usize) -> Vec<f64> {
        let card = self.q.len();
        let total = card.pow(n as u32);
        let mut digits = vec![0usize; n];
        (0..total)
            .map(|c| {
                digits_into(c, card, &mut digits);
                digits.iter().map(|d| self.q[*d]).product()
            })
            .collect()
    }

    pub fn partition(&self, partition: &SupportPartition) -> Result<PartitionedCodes> {
        if partition.k() != self.k {
            return Err(Error::InvalidParameter(format!(
                "partition over K = {} does not match channel K = {}",
                partition.k(),
                self.k
            )));
        }
        let card = self.q.len();
        let nu = partition.unknown().len();
        let nr = partition.revealed().len();
        let q_unknown = self.masses_for(nu);
        let q_revealed = self.masses_for(nr);
        let pow: Vec<usize> = (0..self.k).map(|j| card.pow(j as u32)).collect();
        let mut ud = vec![0usize; nu];
        let mut rd = vec![0usize; nr];
        let mut full = Vec::with_capacity(q_unknown.len() * q_revealed.len());
        for r in 0..q_revealed.len() {
            digits_into(r, card, &mut rd);
            let base: usize = partition.revealed().iter().zip(&rd).map(|(p, d)| d * pow[*p]).sum();
            for u in 0..q_unknown.len() {
                digits_into(u, card, &mut ud);
                let off: usize = partition.unknown().iter().zip(&ud).map(|(p, d)| d * pow[*p]).sum();
                full.push(base + off);
            }
        }
        Ok(PartitionedCodes {
            q_revealed,
            q_unknown,
            full,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erasure_rows_are_normalized() {
        let q = VariableDistribution::bernoulli(0.4).unwrap();
        let t = ChannelTable::build(&ObservationModel::GroupTesting, &q, &[1.0, 1.0]).unwrap();
        let z = t.with_erasures(0.3).unwrap();
        assert_eq!(z.n_inputs(), 9);
        for c in 0..9 {
            let s: f64 = z.row(c).iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let qs: f64 = z.input_masses().iter().sum();
        assert!((qs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_codes_cover_all_inputs() {
        let q = VariableDistribution::tabular(vec![0.0, 1.0, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        let m = ObservationModel::Probit;
        let t = ChannelTable::build(&m, &q, &[1.0, 1.0, 1.0]).unwrap();
        let p = t.partition(&SupportPartition::new(3, vec![1]).unwrap()).unwrap();
        let mut codes = p.full.clone();
        codes.sort_unstable();
        assert_eq!(codes, (0..27).collect::<Vec<_>>());
    }
}
