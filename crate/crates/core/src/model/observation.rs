use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::distribution::VariableDistribution;
use crate::error::{Error, Result};
use crate::numeric::{log_normal_cdf, log_normal_pdf, LogSumExp};

const NORMALIZATION_TOL: f64 = 1e-12;
const MASKED_ENUMERATION_CAP: usize = 1_000_000;
const SYMMETRY_CHECK_CAP: usize = 50_000_000;

/// Explicit conditional table `P(Y = y | X_S = x, β_S = b)` over finite alphabets.
///
/// Rows are indexed by mixed-radix codes with the first support position
/// least significant. Values and coefficients are matched by exact equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularChannel {
    k: usize,
    x_values: Vec<f64>,
    beta_values: Vec<f64>,
    y_card: usize,
    probs: Vec<f64>,
}

impl TabularChannel {
    /// Build from a flat table laid out as `((x_code * |B|^K) + b_code) * |Y| + y`.
    pub fn new(
        k: usize,
        x_values: Vec<f64>,
        beta_values: Vec<f64>,
        y_card: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let ch = Self {
            k,
            x_values,
            beta_values,
            y_card,
            probs,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Build by evaluating `row(x, b)` (a pmf over `0..y_card`) on every cell.
    pub fn from_fn<F>(
        k: usize,
        x_values: Vec<f64>,
        beta_values: Vec<f64>,
        y_card: usize,
        mut row: F,
    ) -> Result<Self>
    where
        F: FnMut(&[f64], &[f64]) -> Vec<f64>,
    {
        let nx = checked_pow(x_values.len(), k)?;
        let nb = checked_pow(beta_values.len(), k)?;
        let mut probs = Vec::with_capacity(nx * nb * y_card);
        let mut x = vec![0.0; k];
        let mut b = vec![0.0; k];
        for xc in 0..nx {
            decode_into(xc, &x_values, &mut x);
            for bc in 0..nb {
                decode_into(bc, &beta_values, &mut b);
                let r = row(&x, &b);
                if r.len() != y_card {
                    return Err(Error::InvalidParameter(format!(
                        "row has {} entries, expected {y_card}",
                        r.len()
                    )));
                }
                probs.extend(r);
            }
        }
        Self::new(k, x_values, beta_values, y_card, probs)
    }

    /// Noiseless Boolean OR over `{0,1}` as a table (coefficient-free).
    pub fn boolean_or(k: usize) -> Result<Self> {
        Self::from_fn(k, vec![0.0, 1.0], vec![1.0], 2, |x, _| {
            if x.iter().any(|v| *v != 0.0) {
                vec![0.0, 1.0]
            } else {
                vec![1.0, 0.0]
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.x_values.is_empty() || self.beta_values.is_empty() || self.y_card == 0 {
            return Err(Error::InvalidParameter("tabular channel has an empty alphabet".into()));
        }
        let expected = checked_pow(self.x_values.len(), self.k)?
            .checked_mul(checked_pow(self.beta_values.len(), self.k)?)
            .and_then(|v| v.checked_mul(self.y_card))
            .ok_or(Error::EnumerationCap {
                size: u128::MAX,
                cap: usize::MAX as u128,
            })?;
        if self.probs.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "table has {} entries, expected {expected}",
                self.probs.len()
            )));
        }
        for (r, row) in self.probs.chunks(self.y_card).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::InvalidParameter(format!("negative mass in row {r}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidParameter(format!("row {r} sums to {s}")));
            }
        }
        self.check_symmetry()
    }

    /// Exhaustive check that jointly permuting `(x, b)` coordinates leaves every row unchanged.
    fn check_symmetry(&self) -> Result<()> {
        let perms = permutations(self.k);
        let rows = self.probs.len() / self.y_card;
        if perms.len().saturating_mul(rows) > SYMMETRY_CHECK_CAP {
            return Err(Error::EnumerationCap {
                size: (perms.len() as u128) * rows as u128,
                cap: SYMMETRY_CHECK_CAP as u128,
            });
        }
        let nx = self.x_values.len().pow(self.k as u32);
        let nb = self.beta_values.len().pow(self.k as u32);
        let mut xd = vec![0usize; self.k];
        let mut bd = vec![0usize; self.k];
        for perm in perms.iter().skip(1) {
            for xc in 0..nx {
                digits_into(xc, self.x_values.len(), &mut xd);
                let pxc = permuted_code(&xd, perm, self.x_values.len());
                for bc in 0..nb {
                    digits_into(bc, self.beta_values.len(), &mut bd);
                    let pbc = permuted_code(&bd, perm, self.beta_values.len());
                    let a = self.row_by_code(xc, bc);
                    let b = self.row_by_code(pxc, pbc);
                    if a.iter().zip(b).any(|(u, v)| (u - v).abs() > NORMALIZATION_TOL) {
                        return Err(Error::InvalidParameter(format!(
                            "table is not permutation symmetric (permutation {perm:?})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn beta_values(&self) -> &[f64] {
        &self.beta_values
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    fn row_by_code(&self, x_code: usize, b_code: usize) -> &[f64] {
        let nb = self.beta_values.len().pow(self.k as u32);
        let start = (x_code * nb + b_code) * self.y_card;
        &self.probs[start..start + self.y_card]
    }

    fn code_of(values: &[f64], v: &[f64], what: &str) -> Result<usize> {
        let mut code = 0;
        for &vi in v.iter().rev() {
            let d = values.iter().position(|a| *a == vi).ok_or_else(|| {
                Error::IncompatibleAlphabet(format!("{what} value {vi} not in table alphabet"))
            })?;
            code = code * values.len() + d;
        }
        Ok(code)
    }

    /// The pmf over `0..y_card` for the given support values and coefficients.
    pub fn row(&self, x: &[f64], beta: &[f64]) -> Result<&[f64]> {
        if x.len() != self.k || beta.len() != self.k {
            return Err(Error::InvalidParameter(format!(
                "tabular channel expects K = {} coordinates",
                self.k
            )));
        }
        let xc = Self::code_of(&self.x_values, x, "variable")?;
        let bc = Self::code_of(&self.beta_values, beta, "coefficient")?;
        Ok(self.row_by_code(xc, bc))
    }

    /// `R` independent replicas sharing the coefficients; the variable alphabet
    /// becomes `|X|^R` labels (first replica least significant), and outcomes
    /// `|Y|^R` labels in the same convention.
    pub fn product(&self, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidParameter("product needs R >= 1".into()));
        }
        let card = self.x_values.len();
        let x_card = checked_pow(card, r)?;
        let y_card = checked_pow(self.y_card, r)?;
        let labels: Vec<f64> = (0..x_card).map(|v| v as f64).collect();
        let base = self.clone();
        Self::from_fn(self.k, labels, self.beta_values.clone(), y_card, |x, b| {
            let mut out = vec![1.0; y_card];
            let replicas: Vec<Vec<f64>> = (0..r)
                .map(|rep| {
                    x.iter()
                        .map(|lab| {
                            let d = (*lab as usize / card.pow(rep as u32)) % card;
                            base.x_values[d]
                        })
                        .collect()
                })
                .collect();
            for (yc, mass) in out.iter_mut().enumerate() {
                let mut c = yc;
                for xr in &replicas {
                    let row = base.row(xr, b).expect("replica values are in the alphabet");
                    *mass *= row[c % base.y_card];
                    c /= base.y_card;
                }
            }
            out
        })
    }
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32).ok_or(Error::EnumerationCap {
        size: u128::MAX,
        cap: usize::MAX as u128,
    })
}

fn decode_into(mut code: usize, values: &[f64], out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = values[code % values.len()];
        code /= values.len();
    }
}

pub(crate) fn digits_into(mut code: usize, card: usize, out: &mut [usize]) {
    for o in out.iter_mut() {
        *o = code % card;
        code /= card;
    }
}

fn permuted_code(digits: &[usize], perm: &[usize], card: usize) -> usize {
    let mut code = 0;
    for &p in perm.iter().rev() {
        code = code * card + digits[p];
    }
    code
}

/// All permutations of `0..k` (identity first).
pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![(0..k).collect::<Vec<_>>()];
    let mut a: Vec<usize> = (0..k).collect();
    let mut c = vec![0usize; k];
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// The conditional law `P(Y | X_S, β_S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationModel {
    /// `Y = OR_k X_k`; coefficients are ignored.
    GroupTesting,
    /// `Y = Σ X_k β_k + W`, `W ~ N(0, 1/snr)`. An infinite `snr` is allowed for sampling only.
    LinearGaussian { snr: f64 },
    /// `Y = 1{Σ X_k β_k + W > 0}` with unit-variance noise.
    Probit,
    Tabular(TabularChannel),
    /// Inner model observed through independent erasures of each variable.
    Missing {
        inner: Box<ObservationModel>,
        miss_prob: f64,
    },
}

impl ObservationModel {
    pub fn linear(snr: f64) -> Result<Self> {
        let m = Self::LinearGaussian { snr };
        m.validate_params()?;
        Ok(m)
    }

    pub fn missing(inner: ObservationModel, miss_prob: f64) -> Result<Self> {
        let m = Self::Missing {
            inner: Box::new(inner),
            miss_prob,
        };
        m.validate_params()?;
        Ok(m)
    }

    fn validate_params(&self) -> Result<()> {
        match self {
            Self::LinearGaussian { snr } => {
                if !(*snr > 0.0) {
                    return Err(Error::InvalidParameter(format!("SNR must be positive, got {snr}")));
                }
            }
            Self::Tabular(t) => t.validate()?,
            Self::Missing { inner, miss_prob } => {
                if !(0.0..1.0).contains(miss_prob) {
                    return Err(Error::InvalidParameter(format!(
                        "missing probability must lie in [0,1), got {miss_prob}"
                    )));
                }
                if matches!(**inner, Self::Missing { .. }) {
                    return Err(Error::InvalidParameter("nested missing wrappers".into()));
                }
                inner.validate_params()?;
            }
            Self::GroupTesting | Self::Probit => {}
        }
        Ok(())
    }

    /// Validate parameters and consistency with `K` and the variable law.
    pub fn check_compatible(&self, k: usize, q: &VariableDistribution) -> Result<()> {
        self.validate_params()?;
        q.validate()?;
        match self.inner() {
            Self::GroupTesting => match q.alphabet() {
                Some(a) if a.iter().all(|(v, _)| *v == 0.0 || *v == 1.0) => Ok(()),
                _ => Err(Error::IncompatibleAlphabet(
                    "group testing needs variables supported on {0,1}".into(),
                )),
            },
            Self::LinearGaussian { .. } => match q {
                VariableDistribution::Gaussian { .. } => Ok(()),
                _ => Err(Error::IncompatibleAlphabet(
                    "the linear model needs Gaussian variables".into(),
                )),
            },
            Self::Probit => Ok(()),
            Self::Tabular(t) => {
                if t.k != k {
                    return Err(Error::InvalidParameter(format!(
                        "table built for K = {}, problem has K = {k}",
                        t.k
                    )));
                }
                match q.alphabet() {
                    Some(a) if a.iter().all(|(v, _)| t.x_values.contains(v)) => Ok(()),
                    _ => Err(Error::IncompatibleAlphabet(
                        "variable alphabet not covered by the table".into(),
                    )),
                }
            }
            Self::Missing { .. } => unreachable!("inner() unwraps the missing wrapper"),
        }
    }

    /// Check a coefficient vector against the model.
    pub fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if let Self::Tabular(t) = self.inner() {
            if beta.len() != t.k {
                return Err(Error::InvalidParameter("coefficient length mismatch".into()));
            }
            TabularChannel::code_of(&t.beta_values, beta, "coefficient")?;
        }
        Ok(())
    }

    /// The model seen by the decoder once erasures are stripped.
    pub fn inner(&self) -> &ObservationModel {
        match self {
            Self::Missing { inner, .. } => inner,
            m => m,
        }
    }

    pub fn miss_prob(&self) -> f64 {
        match self {
            Self::Missing { miss_prob, .. } => *miss_prob,
            _ => 0.0,
        }
    }

    /// Whether outcomes depend on the coefficients at all.
    pub fn uses_beta(&self) -> bool {
        match self.inner() {
            Self::GroupTesting => false,
            Self::Tabular(t) => t.beta_values.len() > 1,
            _ => true,
        }
    }

    /// Short identifier used in reports and configuration matching.
    pub fn id(&self) -> String {
        match self {
            Self::GroupTesting => "group-testing".into(),
            Self::LinearGaussian { snr } => format!("linear(snr={snr})"),
            Self::Probit => "probit".into(),
            Self::Tabular(t) => format!("tabular(k={},|x|={},|y|={})", t.k, t.x_values.len(), t.y_card),
            Self::Missing { inner, miss_prob } => format!("missing({},rho={miss_prob})", inner.id()),
        }
    }

    /// Outcome alphabet size, `None` for real-valued outcomes.
    pub fn y_cardinality(&self) -> Option<usize> {
        match self.inner() {
            Self::GroupTesting | Self::Probit => Some(2),
            Self::LinearGaussian { .. } => None,
            Self::Tabular(t) => Some(t.y_card),
            Self::Missing { .. } => unreachable!(),
        }
    }

    /// Pmf of `Y` for discrete-outcome models.
    pub fn outcome_probs(&self, x: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
        match self.inner() {
            Self::GroupTesting => {
                let one = x.iter().any(|v| *v != 0.0);
                Ok(if one { vec![0.0, 1.0] } else { vec![1.0, 0.0] })
            }
            Self::Probit => {
                let m = dot(x, beta)?;
                Ok(vec![log_normal_cdf(-m).exp(), log_normal_cdf(m).exp()])
            }
            Self::Tabular(t) => Ok(t.row(x, beta)?.to_vec()),
            Self::LinearGaussian { .. } => Err(Error::ContinuousAlphabet("outcome")),
            Self::Missing { .. } => unreachable!(),
        }
    }

    /// `log p(y | x_S, β)` in nats; `-inf` for impossible outcomes.
    pub fn log_likelihood(&self, x: &[f64], beta: &[f64], y: f64) -> Result<f64> {
        match self.inner() {
            Self::GroupTesting => {
                let one = x.iter().any(|v| *v != 0.0);
                match (one, y) {
                    (true, y) if y == 1.0 => Ok(0.0),
                    (false, y) if y == 0.0 => Ok(0.0),
                    (_, y) if y == 0.0 || y == 1.0 => Ok(f64::NEG_INFINITY),
                    _ => Err(Error::IncompatibleAlphabet(format!("outcome {y} is not Boolean"))),
                }
            }
            Self::LinearGaussian { snr } => {
                if !snr.is_finite() {
                    return Err(Error::InvalidParameter(
                        "likelihoods need a finite SNR".into(),
                    ));
                }
                Ok(log_normal_pdf(y, dot(x, beta)?, 1.0 / snr))
            }
            Self::Probit => {
                let m = dot(x, beta)?;
                match y {
                    y if y == 1.0 => Ok(log_normal_cdf(m)),
                    y if y == 0.0 => Ok(log_normal_cdf(-m)),
                    _ => Err(Error::IncompatibleAlphabet(format!("outcome {y} is not binary"))),
                }
            }
            Self::Tabular(t) => {
                let row = t.row(x, beta)?;
                let yi = outcome_index(y, t.y_card)?;
                Ok(row[yi].ln())
            }
            Self::Missing { .. } => unreachable!(),
        }
    }

    /// `log p(y | observed coordinates, β)`, marginalising `None` coordinates under `q`.
    pub fn log_likelihood_masked(
        &self,
        q: &VariableDistribution,
        x: &[Option<f64>],
        beta: &[f64],
        y: f64,
    ) -> Result<f64> {
        if x.iter().all(Option::is_some) {
            let full: Vec<f64> = x.iter().map(|v| v.expect("checked")).collect();
            return self.log_likelihood(&full, beta, y);
        }
        if x.len() != beta.len() {
            return Err(Error::InvalidParameter("coefficient length mismatch".into()));
        }
        match (self.inner(), q) {
            (Self::GroupTesting, _) => {
                let alphabet = q.alphabet().ok_or(Error::ContinuousAlphabet("variable"))?;
                let zero_mass: f64 = alphabet.iter().filter(|(v, _)| *v == 0.0).map(|(_, m)| m).sum();
                let any_one = x.iter().any(|v| matches!(v, Some(v) if *v != 0.0));
                let masked = x.iter().filter(|v| v.is_none()).count() as i32;
                let p0 = if any_one { 0.0 } else { zero_mass.powi(masked) };
                match y {
                    y if y == 0.0 => Ok(p0.ln()),
                    y if y == 1.0 => Ok((-p0).ln_1p()),
                    _ => Err(Error::IncompatibleAlphabet(format!("outcome {y} is not Boolean"))),
                }
            }
            (Self::LinearGaussian { snr }, VariableDistribution::Gaussian { variance }) => {
                let (mean, extra) = masked_moments(x, beta, *variance);
                Ok(log_normal_pdf(y, mean, 1.0 / snr + extra))
            }
            (Self::Probit, VariableDistribution::Gaussian { variance }) => {
                let (mean, extra) = masked_moments(x, beta, *variance);
                let z = mean / (1.0 + extra).sqrt();
                match y {
                    y if y == 1.0 => Ok(log_normal_cdf(z)),
                    y if y == 0.0 => Ok(log_normal_cdf(-z)),
                    _ => Err(Error::IncompatibleAlphabet(format!("outcome {y} is not binary"))),
                }
            }
            (_, q) => self.log_likelihood_enumerated(q, x, beta, y),
        }
    }

    fn log_likelihood_enumerated(
        &self,
        q: &VariableDistribution,
        x: &[Option<f64>],
        beta: &[f64],
        y: f64,
    ) -> Result<f64> {
        let alphabet = q.alphabet().ok_or(Error::ContinuousAlphabet("variable"))?;
        let masked: Vec<usize> = (0..x.len()).filter(|&j| x[j].is_none()).collect();
        let total = checked_pow(alphabet.len(), masked.len())?;
        if total > MASKED_ENUMERATION_CAP {
            return Err(Error::EnumerationCap {
                size: total as u128,
                cap: MASKED_ENUMERATION_CAP as u128,
            });
        }
        let mut full: Vec<f64> = x.iter().map(|v| v.unwrap_or(0.0)).collect();
        let mut digits = vec![0usize; masked.len()];
        let mut acc = LogSumExp::new();
        for code in 0..total {
            digits_into(code, alphabet.len(), &mut digits);
            let mut log_mass = 0.0;
            for (&j, &d) in masked.iter().zip(&digits) {
                full[j] = alphabet[d].0;
                log_mass += alphabet[d].1.ln();
            }
            if log_mass == f64::NEG_INFINITY {
                continue;
            }
            acc.add(log_mass + self.log_likelihood(&full, beta, y)?);
        }
        Ok(acc.value())
    }

    /// Draw one outcome.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, x: &[f64], beta: &[f64], rng: &mut R) -> Result<f64> {
        match self.inner() {
            Self::GroupTesting => Ok(if x.iter().any(|v| *v != 0.0) { 1.0 } else { 0.0 }),
            Self::LinearGaussian { snr } => {
                let mean = dot(x, beta)?;
                if snr.is_infinite() {
                    Ok(mean)
                } else {
                    let w: f64 = StandardNormal.sample(rng);
                    Ok(mean + w / snr.sqrt())
                }
            }
            Self::Probit => {
                let w: f64 = StandardNormal.sample(rng);
                Ok(if dot(x, beta)? + w > 0.0 { 1.0 } else { 0.0 })
            }
            Self::Tabular(t) => {
                let row = t.row(x, beta)?;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (yi, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Ok(yi as f64);
                    }
                }
                Ok(row.iter().rposition(|p| *p > 0.0).unwrap_or(0) as f64)
            }
            Self::Missing { .. } => unreachable!(),
        }
    }
}

fn dot(x: &[f64], beta: &[f64]) -> Result<f64> {
    if x.len() != beta.len() {
        return Err(Error::InvalidParameter(format!(
            "coefficient length {} does not match {} support values",
            beta.len(),
            x.len()
        )));
    }
    Ok(x.iter().zip(beta).map(|(a, b)| a * b).sum())
}

fn masked_moments(x: &[Option<f64>], beta: &[f64], variance: f64) -> (f64, f64) {
    let mut mean = 0.0;
    let mut extra = 0.0;
    for (v, b) in x.iter().zip(beta) {
        match v {
            Some(v) => mean += v * b,
            None => extra += variance * b * b,
        }
    }
    (mean, extra)
}

fn outcome_index(y: f64, card: usize) -> Result<usize> {
    if y >= 0.0 && y.fract() == 0.0 && (y as usize) < card {
        Ok(y as usize)
    } else {
        Err(Error::IncompatibleAlphabet(format!("outcome {y} outside 0..{card}")))
    }
}
