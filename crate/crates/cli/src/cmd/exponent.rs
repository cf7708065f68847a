use clap::Args;
use sparsebound::exponent::{exponent_curve, ExponentCurve, MIN_CURVE_POINTS};
use sparsebound::model::SupportPartition;

use crate::config::{parse_grid, parse_list, Resolver};
use crate::error::CliError;
use crate::output::{Format, Sink};
use crate::setup::{self, ModelArgs};

#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    /// group-testing, linear, probit, missing or tabular.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Size of the unknown part of the support (default K).
    #[arg(long)]
    pub i: Option<usize>,
    /// Sample size; sets the variable variance 1/T of the linear model.
    #[arg(long)]
    pub t: Option<usize>,
    /// Number of points of a uniform grid on [0, 1].
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    /// Explicit grid, overriding `--grid-points`.
    #[arg(long = "rho-grid")]
    pub rho_grid: Option<String>,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

pub fn run(a: ExponentArgs, res: &mut Resolver, sink: &Sink) -> Result<(), CliError> {
    let model = res.get("model", a.model.clone(), "group-testing".to_string())?;
    let k = res.get("k", a.k, 2usize)?;
    let i = res.get("i", a.i, k)?;
    let t = res.opt("t", a.t)?;
    let grid = match res.opt("rho-grid", a.rho_grid.clone())? {
        Some(g) => parse_grid("rho-grid", &g)?,
        None => ExponentCurve::uniform_grid(res.get("grid-points", a.grid_points, 21usize)?),
    };
    if grid.len() < MIN_CURVE_POINTS {
        return Err(CliError::Config(format!(
            "the rho grid needs at least {MIN_CURVE_POINTS} points, got {}",
            grid.len()
        )));
    }
    let s = setup::build(res, &model, &a.model_args, k, t)?;
    let beta = match res.opt("beta", a.model_args.beta.clone())? {
        Some(b) => parse_list::<f64>("beta", &b)?,
        None => s.prior.representative(k),
    };
    res.set("beta", beta.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    res.finish()?;
    let part = SupportPartition::leading(k, i)?;
    let curve = exponent_curve(&s.model, &s.q, &beta, &part, &grid).map_err(|e| match e {
        sparsebound::Error::InvalidParameter(m) => CliError::Config(m),
        other => CliError::Infeasible(other.to_string()),
    })?;

    let mut diag = curve.sidecar_json();
    diag["model"] = serde_json::json!(s.model.id());
    diag["rho_grid"] = serde_json::json!(curve.rho_grid);
    diag["eo_values"] = serde_json::json!(curve.eo_values);
    match (&sink.out_dir, sink.format) {
        (Some(_), _) => {
            sink.emit("exponent.csv", &sink.csv_document(res, &curve.to_csv()))?;
            sink.emit("exponent.json", &sink.json_document(res, diag))?;
            sink.emit("exponent.conf", &sink.config_file(res))?;
        }
        (None, Format::Json) => {
            sink.emit("", &sink.json_document(res, diag))?;
        }
        (None, Format::Csv) => {
            sink.emit("", &sink.csv_document(res, &curve.to_csv()))?;
        }
    }
    sink.summary(&format!(
        "E_o'(0) = {:.9}, I = {:.9}, relative residual {:.3e}, concave {}\n",
        curve.derivative_at_zero,
        curve.mutual_information,
        curve.derivative_residual(),
        curve.concave
    ));
    Ok(())
}
