use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dims::{ProblemDims, SupportSet};
use super::distribution::VariableDistribution;
use super::observation::ObservationModel;
use super::prior::BetaPrior;
use crate::error::{Error, Result};
use crate::numeric::derive_seed;

const MISSING_STREAM: u64 = 0x6d69_7373;

/// The decoder's view of a sample matrix: variables (possibly erased) and outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    dims: ProblemDims,
    x: Vec<f64>,
    mask: Vec<bool>,
    y: Vec<f64>,
}

impl Observations {
    /// Row-major `T × N` values and mask plus `T` outcomes.
    pub fn new(dims: ProblemDims, x: Vec<f64>, mask: Vec<bool>, y: Vec<f64>) -> Result<Self> {
        let cells = dims.n_samples * dims.n_vars;
        if x.len() != cells || mask.len() != cells || y.len() != dims.n_samples {
            return Err(Error::InvalidDims(format!(
                "expected {} x {} values and {} outcomes",
                dims.n_samples, dims.n_vars, dims.n_samples
            )));
        }
        Ok(Self { dims, x, mask, y })
    }

    /// Fully observed matrix.
    pub fn unmasked(dims: ProblemDims, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let mask = vec![false; x.len()];
        Self::new(dims, x, mask, y)
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }

    /// Entry `(t, n)`, or `None` when erased.
    pub fn value(&self, t: usize, n: usize) -> Option<f64> {
        let c = t * self.dims.n_vars + n;
        if self.mask[c] {
            None
        } else {
            Some(self.x[c])
        }
    }

    pub fn is_masked(&self, t: usize, n: usize) -> bool {
        self.mask[t * self.dims.n_vars + n]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn has_missing(&self) -> bool {
        self.mask.iter().any(|m| *m)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Row-major `T × K` restriction to the given columns, written into `out`.
    pub fn columns_into(&self, cols: &[usize], out: &mut Vec<Option<f64>>) {
        out.clear();
        for t in 0..self.dims.n_samples {
            for &c in cols {
                out.push(self.value(t, c));
            }
        }
    }

    /// Pre-erasure value; for test oracles only.
    #[doc(hidden)]
    pub fn oracle_value(&self, t: usize, n: usize) -> f64 {
        self.x[t * self.dims.n_vars + n]
    }

    fn with_mask(&self, mask: Vec<bool>) -> Self {
        Self {
            dims: self.dims,
            x: self.x.clone(),
            mask,
            y: self.y.clone(),
        }
    }
}

/// A generated instance: observations plus the ground truth that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub obs: Observations,
    pub beta: Vec<f64>,
    pub true_support: SupportSet,
    pub seed: u64,
}

/// Draw `X` IID from `q`, `β` once from `prior`, and each `y_t` from the model.
/// Missing wrappers additionally erase entries with a seed derived from `seed`.
pub fn sample_dataset(
    model: &ObservationModel,
    q: &VariableDistribution,
    prior: &BetaPrior,
    dims: ProblemDims,
    support: &SupportSet,
    seed: u64,
) -> Result<Dataset> {
    let k = dims.k_sparse;
    if support.k() != k {
        return Err(Error::InvalidDims(format!(
            "support has {} indices, dims say K = {k}",
            support.k()
        )));
    }
    if support.indices().iter().any(|&i| i >= dims.n_vars) {
        return Err(Error::InvalidDims("support index out of range".into()));
    }
    ProblemDims::new(dims.n_vars, dims.k_sparse, dims.n_samples)?;
    model.check_compatible(k, q)?;
    prior.validate(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = prior.sample(k, &mut rng);
    model.check_beta(&beta)?;

    let n = dims.n_vars;
    let mut x = vec![0.0; dims.n_samples * n];
    let mut y = Vec::with_capacity(dims.n_samples);
    let mut xs = vec![0.0; k];
    for (t, row) in x.chunks_mut(n).enumerate() {
        let mut row_rng = ChaCha8Rng::seed_from_u64(seed);
        row_rng.set_stream(t as u64 + 1);
        for v in row.iter_mut() {
            *v = q.sample(&mut row_rng);
        }
        for (s, &i) in xs.iter_mut().zip(support.indices()) {
            *s = row[i];
        }
        y.push(model.sample_outcome(&xs, &beta, &mut row_rng)?);
    }
    let obs = Observations::unmasked(dims, x, y)?;
    let ds = Dataset {
        obs,
        beta,
        true_support: support.clone(),
        seed,
    };
    let rho = model.miss_prob();
    if rho > 0.0 {
        apply_missing(&ds, rho, derive_seed(seed, MISSING_STREAM))
    } else {
        Ok(ds)
    }
}

/// Erase each entry independently with probability `miss_prob`; existing erasures are kept.
pub fn apply_missing(dataset: &Dataset, miss_prob: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..1.0).contains(&miss_prob) {
        return Err(Error::InvalidParameter(format!(
            "missing probability must lie in [0,1), got {miss_prob}"
        )));
    }
    let n = dataset.obs.dims.n_vars;
    let mut mask = dataset.obs.mask.clone();
    for (t, row) in mask.chunks_mut(n).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        for m in row.iter_mut() {
            let erase = rng.random::<f64>() < miss_prob;
            *m |= erase;
        }
    }
    Ok(Dataset {
        obs: dataset.obs.with_mask(mask),
        ..dataset.clone()
    })
}

/// JSON sidecar describing a serialised dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub dims: ProblemDims,
    pub model: ObservationModel,
    pub variables: VariableDistribution,
    pub beta: Vec<f64>,
    pub true_support: Vec<usize>,
    pub seed: u64,
}

impl Dataset {
    pub fn header(&self, model: &ObservationModel, q: &VariableDistribution) -> DatasetHeader {
        DatasetHeader {
            dims: self.obs.dims,
            model: model.clone(),
            variables: q.clone(),
            beta: self.beta.clone(),
            true_support: self.true_support.indices().to_vec(),
            seed: self.seed,
        }
    }

    /// One row per sample: `y, x_0..x_{N-1}, m_0..m_{N-1}`; erased values are left empty.
    pub fn to_csv(&self) -> String {
        let n = self.obs.dims.n_vars;
        let mut s = String::from("y");
        for j in 0..n {
            let _ = write!(s, ",x_{j}");
        }
        for j in 0..n {
            let _ = write!(s, ",m_{j}");
        }
        s.push('\n');
        for t in 0..self.obs.dims.n_samples {
            let _ = write!(s, "{}", self.obs.y[t]);
            for j in 0..n {
                match self.obs.value(t, j) {
                    Some(v) => {
                        let _ = write!(s, ",{v}");
                    }
                    None => s.push(','),
                }
            }
            for j in 0..n {
                s.push_str(if self.obs.is_masked(t, j) { ",1" } else { ",0" });
            }
            s.push('\n');
        }
        s
    }

    /// Inverse of [`Dataset::to_csv`]. Erased values are not recoverable and read back as 0.
    pub fn from_csv(csv: &str, header: &DatasetHeader) -> Result<Self> {
        let dims = header.dims;
        let n = dims.n_vars;
        let mut lines = csv.lines();
        let head = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))?;
        if head.split(',').count() != 1 + 2 * n {
            return Err(Error::Parse(format!("header has wrong column count for N = {n}")));
        }
        let mut x = Vec::with_capacity(dims.n_samples * n);
        let mut mask = Vec::with_capacity(dims.n_samples * n);
        let mut y = Vec::with_capacity(dims.n_samples);
        for (t, line) in lines.filter(|l| !l.is_empty()).enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 1 + 2 * n {
                return Err(Error::Parse(format!("row {t} has {} fields", fields.len())));
            }
            y.push(parse_f64(fields[0])?);
            for j in 0..n {
                let masked = match fields[1 + n + j] {
                    "0" => false,
                    "1" => true,
                    other => return Err(Error::Parse(format!("bad mask bit {other:?}"))),
                };
                mask.push(masked);
                x.push(if masked { 0.0 } else { parse_f64(fields[1 + j])? });
            }
        }
        let obs = Observations::new(dims, x, mask, y)?;
        Ok(Self {
            obs,
            beta: header.beta.clone(),
            true_support: SupportSet::new(header.true_support.clone(), n)?,
            seed: header.seed,
        })
    }

    /// Write `<stem>.csv` and `<stem>.json` next to each other.
    pub fn save(&self, model: &ObservationModel, q: &VariableDistribution, stem: &Path) -> Result<()> {
        std::fs::write(stem.with_extension("csv"), self.to_csv())?;
        let header = serde_json::to_string_pretty(&self.header(model, q))?;
        std::fs::write(stem.with_extension("json"), header)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<(Self, DatasetHeader)> {
        let header: DatasetHeader =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let ds = Self::from_csv(&std::fs::read_to_string(stem.with_extension("csv"))?, &header)?;
        Ok((ds, header))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_or_copies_column() {
        let dims = ProblemDims::new(2, 1, 3).unwrap();
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let s = SupportSet::new(vec![0], 2).unwrap();
        let ds = sample_dataset(&ObservationModel::GroupTesting, &q, &BetaPrior::unit(1), dims, &s, 9).unwrap();
        for t in 0..3 {
            assert_eq!(ds.obs.y()[t], ds.obs.value(t, 0).unwrap());
        }
    }

    #[test]
    fn zero_missing_is_identity() {
        let dims = ProblemDims::new(5, 2, 4).unwrap();
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let s = SupportSet::new(vec![1, 3], 5).unwrap();
        let ds = sample_dataset(&ObservationModel::GroupTesting, &q, &BetaPrior::unit(2), dims, &s, 1).unwrap();
        assert_eq!(apply_missing(&ds, 0.0, 5).unwrap(), ds);
        assert!(apply_missing(&ds, 1.0, 5).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dims = ProblemDims::new(6, 2, 5).unwrap();
        let q = VariableDistribution::gaussian(0.2).unwrap();
        let model = ObservationModel::linear(3.0).unwrap();
        let s = SupportSet::new(vec![0, 4], 6).unwrap();
        let ds = sample_dataset(&model, &q, &BetaPrior::unit(2), dims, &s, 17).unwrap();
        let ds = apply_missing(&ds, 0.3, 4).unwrap();
        let header = ds.header(&model, &q);
        let back = Dataset::from_csv(&ds.to_csv(), &header).unwrap();
        for t in 0..5 {
            assert_eq!(back.obs.y()[t].to_bits(), ds.obs.y()[t].to_bits());
            for j in 0..6 {
                assert_eq!(back.obs.value(t, j).map(f64::to_bits), ds.obs.value(t, j).map(f64::to_bits));
            }
        }
    }
}
