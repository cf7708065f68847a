use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eo_second_derivative_bound, eo_single_letter, eo_single_letter_extended};
use crate::error::{Error, Result};
use crate::info::mi_for_beta;
use crate::model::{ObservationModel, SupportPartition, VariableDistribution};

/// Fewest grid points accepted for a curve.
pub const MIN_CURVE_POINTS: usize = 9;
const FD_FIRST: f64 = 1e-4;
const FD_SECOND: f64 = 1e-3;
const CHORD_TOL: f64 = 1e-9;

/// `E_o(ρ, β)` on a grid with derivative and curvature diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentCurve {
    pub rho_grid: Vec<f64>,
    pub eo_values: Vec<f64>,
    pub beta: Vec<f64>,
    pub partition_size_i: usize,
    /// Central difference at `ρ = 0`.
    pub derivative_at_zero: f64,
    /// Largest weighted curvature bound over the grid (discrete models only).
    pub second_derivative_bound: Option<f64>,
    pub second_derivative_sup_bound: Option<f64>,
    /// Second central differences at each grid point.
    pub fd_second_derivative: Vec<f64>,
    pub mutual_information: f64,
    /// Whether every consecutive triple passes the chord test.
    pub concave: bool,
}

/// Evaluate the curve on an increasing grid in `[0, 1]` starting at `0`.
pub fn exponent_curve(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: &[f64],
    partition: &SupportPartition,
    rho_grid: &[f64],
) -> Result<ExponentCurve> {
    if rho_grid.len() < MIN_CURVE_POINTS {
        return Err(Error::InvalidParameter(format!(
            "rho grid needs at least {MIN_CURVE_POINTS} points, got {}",
            rho_grid.len()
        )));
    }
    if rho_grid[0] != 0.0 || rho_grid.windows(2).any(|w| w[1] <= w[0]) || rho_grid[rho_grid.len() - 1] > 1.0 {
        return Err(Error::InvalidParameter(
            "rho grid must increase strictly from 0 and stay within [0, 1]".into(),
        ));
    }
    model.check_compatible(partition.k(), q)?;
    model.check_beta(beta)?;
    let eo = |r: f64| eo_single_letter_extended(model, q, beta, partition, r);
    let eo_values = rho_grid
        .par_iter()
        .map(|&r| eo_single_letter(model, q, beta, partition, r))
        .collect::<Result<Vec<_>>>()?;
    let fd_second_derivative = rho_grid
        .par_iter()
        .map(|&r| Ok((eo(r + FD_SECOND)? - 2.0 * eo(r)? + eo(r - FD_SECOND)?) / (FD_SECOND * FD_SECOND)))
        .collect::<Result<Vec<_>>>()?;
    let derivative_at_zero = (eo(FD_FIRST)? - eo(-FD_FIRST)?) / (2.0 * FD_FIRST);
    let (second_derivative_bound, second_derivative_sup_bound) = if q.is_discrete() {
        let bounds = rho_grid
            .par_iter()
            .map(|&r| eo_second_derivative_bound(model, q, beta, partition, r))
            .collect::<Result<Vec<_>>>()?;
        (
            Some(bounds.iter().map(|b| b.weighted).fold(0.0, f64::max)),
            Some(bounds.iter().map(|b| b.sup).fold(0.0, f64::max)),
        )
    } else {
        (None, None)
    };
    let mutual_information = mi_for_beta(model, q, beta, partition)?.value;
    let concave = is_concave(rho_grid, &eo_values);
    Ok(ExponentCurve {
        rho_grid: rho_grid.to_vec(),
        eo_values,
        beta: beta.to_vec(),
        partition_size_i: partition.size(),
        derivative_at_zero,
        second_derivative_bound,
        second_derivative_sup_bound,
        fd_second_derivative,
        mutual_information,
        concave,
    })
}

fn is_concave(x: &[f64], y: &[f64]) -> bool {
    (0..x.len().saturating_sub(2)).all(|j| {
        let t = (x[j + 1] - x[j]) / (x[j + 2] - x[j]);
        let chord = (1.0 - t) * y[j] + t * y[j + 2];
        y[j + 1] >= chord - CHORD_TOL
    })
}

impl ExponentCurve {
    /// Uniform grid of `n` points on `[0, 1]`.
    pub fn uniform_grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| j as f64 / (n.max(2) - 1) as f64).collect()
    }

    /// `rho,eo_nats` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,eo_nats\n");
        for (r, e) in self.rho_grid.iter().zip(&self.eo_values) {
            out.push_str(&format!("{r},{e}\n"));
        }
        out
    }

    /// `|E_o'(0) - I| / I`, or the absolute difference when `I = 0`.
    pub fn derivative_residual(&self) -> f64 {
        let d = (self.derivative_at_zero - self.mutual_information).abs();
        if self.mutual_information > 0.0 {
            d / self.mutual_information
        } else {
            d
        }
    }

    /// Diagnostics without the grid values.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "beta": self.beta,
            "partition_size_i": self.partition_size_i,
            "derivative_at_zero": self.derivative_at_zero,
            "mutual_information": self.mutual_information,
            "derivative_residual": self.derivative_residual(),
            "second_derivative_bound": self.second_derivative_bound,
            "second_derivative_sup_bound": self.second_derivative_sup_bound,
            "fd_second_derivative": self.fd_second_derivative,
            "concave": self.concave,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_grid_rejected() {
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let p = SupportPartition::leading(1, 1).unwrap();
        let r = exponent_curve(&ObservationModel::GroupTesting, &q, &[1.0], &p, &ExponentCurve::uniform_grid(5));
        assert!(r.is_err());
    }

    #[test]
    fn csv_shape() {
        let q = VariableDistribution::bernoulli(0.5).unwrap();
        let p = SupportPartition::leading(2, 1).unwrap();
        let c = exponent_curve(&ObservationModel::GroupTesting, &q, &[1.0, 1.0], &p, &ExponentCurve::uniform_grid(9))
            .unwrap();
        let csv = c.to_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("rho,eo_nats\n0,0\n"));
        assert!(c.concave);
        assert!((c.derivative_at_zero - c.mutual_information).abs() < 1e-6 * c.mutual_information);
    }
}
