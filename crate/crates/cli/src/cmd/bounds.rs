use clap::Args;
use serde_json::{json, Map, Value};
use sparsebound::bounds::*;
use sparsebound::info::{beta_candidates, mi_averaged, mi_worst_case, MIEstimate};
use sparsebound::model::{ProblemDims, SupportPartition};

use crate::config::Resolver;
use crate::error::CliError;
use crate::output::Sink;
use crate::setup::{self, ModelArgs, Setup};

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// group-testing, linear, probit, multivariate, missing or tabular.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Sample size for the scaling condition and the finite-size union bound.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Variance of the coefficient prior in the linear model.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Number of problems sharing the support (multivariate).
    #[arg(long)]
    pub r: Option<usize>,
    /// SNR growing as `factor · T` in the missing-data sufficiency condition.
    #[arg(long = "snr-scale")]
    pub snr_scale: Option<f64>,
    /// Recover at least this many support indices.
    #[arg(long = "k-recover")]
    pub k_recover: Option<usize>,
    #[arg(long = "quad-order")]
    pub quad_order: Option<usize>,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

struct Computed {
    nec: BoundReport,
    suf: BoundReport,
    /// Per-`i` averaged and worst-case MI, when the thresholds come from ratio formulas.
    mis: Option<(Vec<MIEstimate>, Vec<MIEstimate>)>,
    setup: Option<Setup>,
    extra: Map<String, Value>,
}

fn base_bounds(res: &mut Resolver, a: &BoundsArgs, name: &str, dims: &ProblemDims, eps: f64) -> Result<Computed, CliError> {
    let k = dims.k_sparse;
    let t_opt = a.t;
    match name {
        "group-testing" => {
            let s = setup::build(res, name, &a.model_args, k, t_opt)?;
            let p = match s.q {
                sparsebound::model::VariableDistribution::Bernoulli { p } => p,
                _ => unreachable!("group testing uses Bernoulli variables"),
            };
            let (nec, suf) = bounds_group_testing(dims, p, eps)?;
            let mis: Vec<MIEstimate> = (1..=k)
                .map(|i| sparsebound::info::mi_group_testing(p, i, k))
                .collect::<Result<_, _>>()?;
            Ok(Computed {
                nec,
                suf,
                mis: Some((mis.clone(), mis)),
                setup: Some(s),
                extra: Map::new(),
            })
        }
        "linear" => {
            let snr = res.get("snr", a.model_args.snr, setup::DEFAULT_SNR)?;
            let sigma2 = res.get("sigma2", a.sigma2, 1.0)?;
            let bmin = res.get("bmin", a.model_args.bmin, 1.0)?;
            let (nec, suf) = bounds_linear_regression(dims, snr, sigma2, bmin, eps)?;
            let mut extra = Map::new();
            extra.insert("snr_threshold".into(), json!(snr_necessity_linear(dims, sigma2)?));
            let s = match t_opt {
                Some(t) => Some(setup::build(res, name, &a.model_args, k, Some(t))?),
                None => None,
            };
            Ok(Computed {
                nec,
                suf,
                mis: None,
                setup: s,
                extra,
            })
        }
        "probit" => {
            let order = res.get("quad-order", a.quad_order, 64usize)?;
            let b = bounds_probit(dims, eps, order)?;
            let mut extra = Map::new();
            extra.insert("entropy_checks".into(), json!(b.entropy_checks));
            let mis = b
                .necessity
                .per_i
                .iter()
                .map(|r| MIEstimate::new(r.denominator_nats, sparsebound::info::MiMethod::Quadrature, 0.0, r.i))
                .collect::<Vec<_>>();
            Ok(Computed {
                nec: b.necessity,
                suf: b.sufficiency,
                mis: Some((mis.clone(), mis)),
                setup: Some(setup::build(res, name, &a.model_args, k, t_opt)?),
                extra,
            })
        }
        "tabular" => {
            let s = setup::build(res, name, &a.model_args, k, t_opt)?;
            let cands = beta_candidates(&s.model, &s.prior, k)?;
            let mut avg = Vec::new();
            let mut worst = Vec::new();
            for i in 1..=k {
                let part = SupportPartition::leading(k, i)?;
                avg.push(mi_averaged(&s.model, &s.q, &s.prior, &part)?);
                worst.push(mi_worst_case(&s.model, &s.q, &cands, &part)?.0);
            }
            let nec = necessity_threshold(dims, &avg)?.with_model(s.model.id());
            let suf = sufficiency_threshold_fixed(dims, &worst, eps)?.with_model(s.model.id());
            Ok(Computed {
                nec,
                suf,
                mis: Some((avg, worst)),
                setup: Some(s),
                extra: Map::new(),
            })
        }
        other => Err(CliError::Config(format!(
            "unknown model `{other}` (group-testing, linear, probit, multivariate, missing, tabular)"
        ))),
    }
}

pub fn run(a: BoundsArgs, res: &mut Resolver, sink: &Sink) -> Result<(), CliError> {
    let model = res.get("model", a.model.clone(), "group-testing".to_string())?;
    let n = res.require("n", a.n)?;
    let k = res.require("k", a.k)?;
    let t = res.opt("t", a.t)?;
    let a = BoundsArgs { t, ..a };
    let eps = res.get("epsilon", a.epsilon, DEFAULT_EPSILON)?;
    let dims = ProblemDims::new(n, k, t.unwrap_or(1))?;

    let mut c = match model.as_str() {
        "multivariate" => {
            let r = res.get("r", a.r, 2usize)?;
            let base = res.get("base", a.model_args.base.clone(), "group-testing".to_string())?;
            let b = base_bounds(res, &a, &base, &dims, eps)?;
            let mut extra = b.extra;
            extra.insert("r_problems".into(), json!(r));
            Computed {
                nec: bounds_multivariate(&b.nec, r)?,
                suf: bounds_multivariate(&b.suf, r)?,
                mis: b.mis.map(|(x, y)| (x.iter().map(|m| m.scaled(r as f64)).collect(), y.iter().map(|m| m.scaled(r as f64)).collect())),
                setup: None,
                extra,
            }
        }
        "missing" => {
            let base = res.get("base", a.model_args.base.clone(), "group-testing".to_string())?;
            let rho = res.get("miss-prob", a.model_args.miss_prob, setup::DEFAULT_MISS_PROB)?;
            let bmin = res.get("bmin", a.model_args.bmin, 1.0)?;
            let snr = match res.opt("snr-scale", a.snr_scale)? {
                Some(f) => SnrSpec::ScaledWithSamples(f),
                None => SnrSpec::Fixed(res.get("snr", a.model_args.snr, setup::DEFAULT_SNR)?),
            };
            let b = base_bounds(res, &a, &base, &dims, eps)?;
            let (nec, suf) = bounds_missing(&dims, rho, &b.nec, bmin, snr, eps)?;
            let s = if base == "linear" && t.is_none() {
                None
            } else {
                Some(setup::build(res, "missing", &a.model_args, k, t)?)
            };
            Computed {
                nec,
                suf,
                mis: None,
                setup: s,
                extra: b.extra,
            }
        }
        other => base_bounds(res, &a, other, &dims, eps)?,
    };

    let mut reports = Map::new();
    reports.insert("necessity".into(), json!(c.nec));
    reports.insert("sufficiency".into(), json!(c.suf));
    let mut rows: Vec<(&str, BoundReport)> = vec![("necessity", c.nec.clone()), ("sufficiency", c.suf.clone())];

    if let Some(kr) = res.opt("k-recover", a.k_recover)? {
        let (avg, worst) = c
            .mis
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`k-recover` is not available for model `{model}`")))?;
        let pn = partial_recovery_thresholds(&dims, avg, kr, ThresholdKind::Necessity)?;
        let ps = partial_recovery_thresholds(&dims, worst, kr, ThresholdKind::SufficiencyFixed { epsilon: eps })?;
        reports.insert("partial_necessity".into(), json!(pn));
        reports.insert("partial_sufficiency".into(), json!(ps));
        rows.push(("partial_necessity", pn));
        rows.push(("partial_sufficiency", ps));
    }

    let mut finite = None;
    if let Some(t) = t {
        let tau = res.get("tau", a.tau, DEFAULT_TAU)?;
        if let (Some((_, worst)), Some(s)) = (&c.mis, &c.setup) {
            let p_min = s.prior.p_min().unwrap_or(1.0);
            let mut sc = sufficiency_threshold_scaling(&dims, worst, tau, p_min, t as f64)?;
            if s.q.is_discrete() && model != "multivariate" {
                let cands = beta_candidates(&s.model, &s.prior, k)?;
                sc.premise_holds = Some(scaling_premise_holds(&s.model, &s.q, &cands, k, tau)?);
            }
            reports.insert("sufficiency_scaling".into(), json!(sc));
            rows.push(("sufficiency_scaling", sc));
        }
        if let Some(s) = &c.setup {
            match finite_size_error_bound(&dims, &s.model, &s.q, &s.prior, RhoStrategy::Optimize) {
                Ok(b) => finite = Some(b),
                Err(e) => {
                    c.extra.insert("finite_size_unavailable".into(), json!(e.to_string()));
                }
            }
        }
    }

    let mut result = Map::new();
    result.insert("model".into(), json!(model));
    result.insert("reports".into(), Value::Object(reports));
    if let Some(b) = &finite {
        result.insert("finite_size".into(), json!(b));
    }
    result.extend(c.extra);

    let mut csv = String::from("report,i,numerator_nats,denominator_nats,ratio_t,vacuous,t_threshold\n");
    for (name, r) in &rows {
        for p in &r.per_i {
            csv.push_str(&format!(
                "{name},{},{},{},{},{},{}\n",
                p.i, p.numerator_nats, p.denominator_nats, p.ratio_t, p.vacuous, r.t_threshold
            ));
        }
    }
    res.finish()?;
    sink.emit_main(res, "bounds", Value::Object(result), &csv)?;

    let mut s = format!("{:<22} {:>16} {:>9}\n", "report", "threshold_T", "argmax_i");
    for (name, r) in &rows {
        s.push_str(&format!("{name:<22} {:>16.4} {:>9}\n", r.t_threshold, r.argmax_i));
    }
    if let Some(b) = &finite {
        s.push_str(&format!("finite-size union bound at T = {}: {:.6e}\n", b.n_samples, b.union_bound));
    }
    sink.summary(&s);
    Ok(())
}
