//! Model, variable distribution and coefficient prior from resolved parameters.

use std::path::PathBuf;

use clap::Args;
use sparsebound::model::{BetaPrior, ObservationModel, TabularChannel, VariableDistribution};

use crate::config::{parse_list, Resolver};
use crate::error::CliError;

pub const DEFAULT_SNR: f64 = 100.0;
pub const DEFAULT_MISS_PROB: f64 = 0.3;

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Variable success probability for group testing, or `auto` for 1/K.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub snr: Option<f64>,
    /// Magnitude of the coefficients (`fixed` and `random-sign` priors).
    #[arg(long)]
    pub bmin: Option<f64>,
    /// Coefficient prior: `fixed`, `random-sign`, or `uniform` over a table's coefficient alphabet.
    #[arg(long)]
    pub prior: Option<String>,
    /// Inner model of the `missing` wrapper.
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long = "miss-prob")]
    pub miss_prob: Option<f64>,
    /// JSON file with fields `k`, `x_values`, `beta_values`, `y_card`, `probs`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Comma-separated pmf over the table's variable alphabet (default uniform).
    #[arg(long = "q-pmf")]
    pub q_pmf: Option<String>,
    /// Comma-separated fixed coefficients for a table model.
    #[arg(long)]
    pub beta: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Setup {
    pub model: ObservationModel,
    pub q: VariableDistribution,
    pub prior: BetaPrior,
}

pub fn resolve_p(res: &mut Resolver, flag: Option<String>, k: usize) -> Result<f64, CliError> {
    let raw = res.get("p", flag, "auto".to_string())?;
    let p = if raw == "auto" {
        if k >= 2 {
            1.0 / k as f64
        } else {
            0.5
        }
    } else {
        raw.parse::<f64>()
            .map_err(|_| CliError::Config(format!("`p` must be a number or `auto`, got `{raw}`")))?
    };
    if !(p > 0.0 && p < 1.0) {
        return Err(CliError::Config(format!("`p` must lie in (0, 1), got {p}")));
    }
    res.set("p", p);
    Ok(p)
}

fn coefficient_prior(res: &mut Resolver, a: &ModelArgs, k: usize) -> Result<BetaPrior, CliError> {
    let bmin = res.get("bmin", a.bmin, 1.0)?;
    if !(bmin > 0.0) {
        return Err(CliError::Config("`bmin` must be positive".into()));
    }
    match res.get("prior", a.prior.clone(), "fixed".to_string())?.as_str() {
        "fixed" => Ok(BetaPrior::fixed(vec![bmin; k])),
        "random-sign" => Ok(BetaPrior::random_sign(bmin)),
        other => Err(CliError::Config(format!("unknown prior `{other}` (fixed or random-sign)"))),
    }
}

fn load_table(path: &PathBuf) -> Result<TabularChannel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let t: TabularChannel =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid table {}: {e}", path.display())))?;
    t.validate()?;
    Ok(t)
}

/// Build the named model with `K = k`. `t` sets the variable variance of the linear model.
pub fn build(res: &mut Resolver, name: &str, a: &ModelArgs, k: usize, t: Option<usize>) -> Result<Setup, CliError> {
    match name {
        "group-testing" => {
            let p = resolve_p(res, a.p.clone(), k)?;
            Ok(Setup {
                model: ObservationModel::GroupTesting,
                q: VariableDistribution::bernoulli(p)?,
                prior: BetaPrior::unit(k),
            })
        }
        "linear" => {
            let snr = res.get("snr", a.snr, DEFAULT_SNR)?;
            let t = t.ok_or_else(|| CliError::Config("the linear model needs the sample size `t`".into()))?;
            Ok(Setup {
                model: ObservationModel::linear(snr)?,
                q: VariableDistribution::for_linear_model(t),
                prior: coefficient_prior(res, a, k)?,
            })
        }
        "probit" => Ok(Setup {
            model: ObservationModel::Probit,
            q: VariableDistribution::gaussian(1.0)?,
            prior: coefficient_prior(res, a, k)?,
        }),
        "missing" => {
            let base = res.get("base", a.base.clone(), "group-testing".to_string())?;
            if base == "missing" {
                return Err(CliError::Config("`base` cannot itself be `missing`".into()));
            }
            let rho = res.get("miss-prob", a.miss_prob, DEFAULT_MISS_PROB)?;
            let inner = build(res, &base, a, k, t)?;
            Ok(Setup {
                model: ObservationModel::missing(inner.model, rho)?,
                ..inner
            })
        }
        "tabular" => {
            let path = res.require("table", a.table.as_ref().map(|p| p.display().to_string()))?;
            let table = load_table(&PathBuf::from(path))?;
            if table.k() != k {
                return Err(CliError::Config(format!("table has K = {}, but k = {k}", table.k())));
            }
            let xs = table.x_values().to_vec();
            let pmf = match res.opt("q-pmf", a.q_pmf.clone())? {
                Some(s) => parse_list::<f64>("q-pmf", &s)?,
                None => vec![1.0 / xs.len() as f64; xs.len()],
            };
            let q = VariableDistribution::tabular(xs, pmf)?;
            let bvals = table.beta_values().to_vec();
            let prior = match res.get("prior", a.prior.clone(), "fixed".to_string())?.as_str() {
                "fixed" => {
                    let beta = match res.opt("beta", a.beta.clone())? {
                        Some(s) => parse_list::<f64>("beta", &s)?,
                        None => vec![bvals[0]; k],
                    };
                    BetaPrior::fixed(beta)
                }
                "uniform" => BetaPrior::discrete(bvals.clone(), vec![1.0 / bvals.len() as f64; bvals.len()])?,
                other => return Err(CliError::Config(format!("unknown prior `{other}` for tables (fixed or uniform)"))),
            };
            Ok(Setup {
                model: ObservationModel::Tabular(table),
                q,
                prior,
            })
        }
        other => Err(CliError::Config(format!(
            "unknown model `{other}` (group-testing, linear, probit, missing, tabular)"
        ))),
    }
}
