use clap::Args;
use serde_json::json;
use sparsebound::bounds::*;
use sparsebound::model::ProblemDims;

use crate::config::{parse_grid, parse_list, Resolver};
use crate::error::CliError;
use crate::output::Sink;
use crate::setup::resolve_p;

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    /// `cs` (linear regression, T/LB against T) or `gt` (group-testing thresholds against N).
    pub id: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated SNR values (cs).
    #[arg(long)]
    pub snr: Option<String>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Sample-size grid (cs): list, `start:stop:log[:per_decade]` or `start:stop:lin:step`.
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    /// Grid of N (gt), same syntax as `--t-grid`.
    #[arg(long = "n-grid")]
    pub n_grid: Option<String>,
    /// Pooling probability (gt), or `auto` for 1/K.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Target error probability defining the finite-size upper threshold (gt).
    #[arg(long)]
    pub delta: Option<f64>,
}

pub fn run(a: FigureArgs, res: &mut Resolver, sink: &Sink) -> Result<(), CliError> {
    res.set("id", &a.id);
    match a.id.as_str() {
        "cs" => linear(a, res, sink),
        "gt" => group_testing(a, res, sink),
        other => Err(CliError::Config(format!("unknown figure `{other}` (cs or gt)"))),
    }
}

fn linear(a: FigureArgs, res: &mut Resolver, sink: &Sink) -> Result<(), CliError> {
    let n = res.get("n", a.n, SWEEP_N)?;
    let k = res.get("k", a.k, SWEEP_K)?;
    let sigma2 = res.get("sigma2", a.sigma2, 1.0)?;
    let snrs: Vec<f64> = parse_list("snr", &res.get("snr", a.snr, "1,10,100,1000,10000".to_string())?)?;
    let t_grid = parse_grid("t-grid", &res.get("t-grid", a.t_grid, "1:1e8:log:20".to_string())?)?;
    res.finish()?;
    let thr = snr_necessity_linear(&ProblemDims::new(n, k, 1)?, sigma2)?;
    let mut pts = Vec::new();
    for &snr in &snrs {
        pts.extend(sample_ratio_curve(n, k, snr, sigma2, &t_grid)?);
    }
    let mut csv = String::from("t,snr,t_over_lb\n");
    for p in &pts {
        csv.push_str(&format!("{},{},{}\n", p.t, p.snr, p.t_over_lb));
    }
    sink.emit_main(res, "figure-cs", json!({ "snr_threshold": thr, "points": pts }), &csv)?;
    let mut s = format!("SNR threshold {thr:.4}\n{:>12} {:>16} {:>14}\n", "snr", "max_t_over_lb", "first_t_ge_1");
    for &snr in &snrs {
        let curve: Vec<_> = pts.iter().filter(|p| p.snr == snr).collect();
        let max = curve.iter().map(|p| p.t_over_lb).fold(0.0, f64::max);
        let cross = curve.iter().find(|p| p.t_over_lb >= 1.0).map_or("never".to_string(), |p| format!("{:.4e}", p.t));
        s.push_str(&format!("{snr:>12} {max:>16.6} {cross:>14}\n"));
    }
    sink.summary(&s);
    Ok(())
}

fn group_testing(a: FigureArgs, res: &mut Resolver, sink: &Sink) -> Result<(), CliError> {
    let k = res.get("k", a.k, 2usize)?;
    let p = resolve_p(res, a.p, k)?;
    let grid = parse_grid("n-grid", &res.get("n-grid", a.n_grid, "100:10000:log".to_string())?)?;
    let eps = res.get("epsilon", a.epsilon, DEFAULT_EPSILON)?;
    let delta = res.get("delta", a.delta, GT_UPPER_DELTA)?;
    res.finish()?;
    let ns: Vec<usize> = grid
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(CliError::Config(format!("`n-grid` entries must be integers, got {v}")))
            }
        })
        .collect::<Result<_, _>>()?;
    let rows = group_testing_rows(k, p, &ns, eps, delta)?;
    let mut csv = String::from("n,k,t_lower,t_upper,t_upper_asym\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.n, r.k, r.t_lower, r.t_upper, r.t_upper_asym));
    }
    sink.emit_main(res, "figure-gt", json!({ "rows": rows }), &csv)?;
    let mut s = format!("{:>8} {:>10} {:>10} {:>8}\n", "n", "t_lower", "t_upper", "ratio");
    for r in &rows {
        s.push_str(&format!("{:>8} {:>10.2} {:>10} {:>8.3}\n", r.n, r.t_lower, r.t_upper, r.t_upper / r.t_lower));
    }
    sink.summary(&s);
    Ok(())
}
