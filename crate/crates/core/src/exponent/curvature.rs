use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelTable, ObservationModel, SupportPartition, VariableDistribution};
use crate::numeric::LogSumExp;

/// Upper bounds on `|∂²E_o/∂ρ²|` at one `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBound {
    pub rho: f64,
    /// `Σ g E[u log² u] / Σ g`.
    pub weighted: f64,
    /// `max E[u log² u]` over cells with `g > 0`.
    pub sup: f64,
}

/// Curvature bounds for a discrete model, with
/// `g = Q(x_R) A^{1+ρ}`, `A = Σ_u Q(x_U) p^{1/(1+ρ)}`, `u = p^{1/(1+ρ)} / A`
/// and the inner expectation taken over `Q(x_U)`.
pub fn eo_second_derivative_bound(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: &[f64],
    partition: &SupportPartition,
    rho: f64,
) -> Result<CurvatureBound> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("need 0 <= rho <= 1, got {rho}")));
    }
    if !q.is_discrete() {
        return Err(Error::ContinuousAlphabet("curvature bounds need a finite alphabet"));
    }
    let table = ChannelTable::build(model, q, beta)?;
    let codes = table.partition(partition)?;
    let nu = codes.q_unknown.len();
    let s = 1.0 / (1.0 + rho);
    let mut log_g = Vec::new();
    let mut moments = Vec::new();
    for (r, &qr) in codes.q_revealed.iter().enumerate() {
        if qr == 0.0 {
            continue;
        }
        let block = &codes.full[r * nu..(r + 1) * nu];
        for y in 0..table.y_card() {
            let mut lse = LogSumExp::new();
            for (&c, &qu) in block.iter().zip(&codes.q_unknown) {
                let p = table.row(c)[y];
                if p > 0.0 && qu > 0.0 {
                    lse.add(qu.ln() + s * p.ln());
                }
            }
            let log_a = lse.value();
            if log_a == f64::NEG_INFINITY {
                continue;
            }
            let mut m = 0.0;
            for (&c, &qu) in block.iter().zip(&codes.q_unknown) {
                let p = table.row(c)[y];
                if p > 0.0 && qu > 0.0 {
                    let log_u = s * p.ln() - log_a;
                    m += qu * log_u.exp() * log_u * log_u;
                }
            }
            log_g.push(qr.ln() + (1.0 + rho) * log_a);
            moments.push(m);
        }
    }
    let g_max = log_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (lg, m) in log_g.iter().zip(&moments) {
        let w = (lg - g_max).exp();
        num += w * m;
        den += w;
    }
    Ok(CurvatureBound {
        rho,
        weighted: if den > 0.0 { num / den } else { 0.0 },
        sup: moments.iter().cloned().fold(0.0, f64::max),
    })
}
