use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_binomial;

/// Largest number of candidate supports the exhaustive routines will visit.
pub const SUPPORT_ENUMERATION_CAP: u64 = 1_000_000;

/// Problem size: `n_vars` variables, `k_sparse` of them salient, `n_samples` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDims {
    pub n_vars: usize,
    pub k_sparse: usize,
    pub n_samples: usize,
}

impl ProblemDims {
    /// Requires `1 <= K <= N/2` and `T >= 1`.
    pub fn new(n_vars: usize, k_sparse: usize, n_samples: usize) -> Result<Self> {
        if k_sparse == 0 || 2 * k_sparse > n_vars {
            return Err(Error::InvalidDims(format!(
                "need 1 <= K <= N/2, got N = {n_vars}, K = {k_sparse}"
            )));
        }
        if n_samples == 0 {
            return Err(Error::InvalidDims("need T >= 1".into()));
        }
        Ok(Self {
            n_vars,
            k_sparse,
            n_samples,
        })
    }

    pub fn with_samples(&self, n_samples: usize) -> Result<Self> {
        Self::new(self.n_vars, self.k_sparse, n_samples)
    }

    /// `C(N, K)` as a float (may be huge).
    pub fn support_count(&self) -> f64 {
        log_binomial(self.n_vars as u64, self.k_sparse as u64).exp()
    }

    /// Error unless `C(N, K) <= 10^6`.
    pub fn check_enumerable(&self) -> Result<u64> {
        let log_count = log_binomial(self.n_vars as u64, self.k_sparse as u64);
        if log_count > (SUPPORT_ENUMERATION_CAP as f64).ln() + 1e-9 {
            return Err(Error::EnumerationCap {
                size: log_count.exp().round() as u128,
                cap: SUPPORT_ENUMERATION_CAP as u128,
            });
        }
        Ok(log_count.exp().round() as u64)
    }
}

/// A canonical (strictly increasing) set of `K` variable indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Validate a strictly increasing index list against the variable count.
    pub fn new(indices: Vec<usize>, n_vars: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("support must be nonempty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "support indices must be strictly increasing: {indices:?}"
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= n_vars {
                return Err(Error::InvalidParameter(format!(
                    "support index {last} out of range for N = {n_vars}"
                )));
            }
        }
        Ok(Self { indices })
    }

    /// Sort, deduplicate-check and validate.
    pub fn from_unsorted(mut indices: Vec<usize>, n_vars: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, n_vars)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Number of indices of `self` missing from `other` (the overlap error count).
    pub fn differing(&self, other: &SupportSet) -> usize {
        self.indices.iter().filter(|i| !other.contains(**i)).count()
    }

    /// Apply a relabelling of variable indices.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        Self::from_unsorted(self.indices.iter().map(|&i| perm[i]).collect(), perm.len())
    }
}

/// Split of the `K` support positions into an unknown part (size `i`) and a
/// revealed part (size `K - i`). Positions index into `X_S` and `β_S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportPartition {
    unknown: Vec<usize>,
    revealed: Vec<usize>,
}

impl SupportPartition {
    pub fn new(k: usize, mut unknown: Vec<usize>) -> Result<Self> {
        unknown.sort_unstable();
        unknown.dedup();
        if unknown.is_empty() || unknown.len() > k || unknown.iter().any(|&p| p >= k) {
            return Err(Error::InvalidParameter(format!(
                "partition needs 1..=K distinct positions below K = {k}, got {unknown:?}"
            )));
        }
        let revealed = (0..k).filter(|p| !unknown.contains(p)).collect();
        Ok(Self { unknown, revealed })
    }

    /// The canonical partition with the first `i` positions unknown.
    pub fn leading(k: usize, i: usize) -> Result<Self> {
        Self::new(k, (0..i).collect())
    }

    pub fn unknown(&self) -> &[usize] {
        &self.unknown
    }

    pub fn revealed(&self) -> &[usize] {
        &self.revealed
    }

    pub fn size(&self) -> usize {
        self.unknown.len()
    }

    pub fn k(&self) -> usize {
        self.unknown.len() + self.revealed.len()
    }
}

/// Lexicographic iterator over the `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if next[pos] < self.n - k + pos {
                next[pos] += 1;
                for j in pos + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        self.current = None;
        Some(out)
    }
}
