use clap::Args;
use serde_json::json;
use sparsebound::bounds::{finite_size_error_bound, RhoStrategy};
use sparsebound::model::ProblemDims;
use sparsebound::sim::{campaign_csv, run_trials, validate_bound, validate_per_i, Verdict};

use crate::config::Resolver;
use crate::error::CliError;
use crate::output::Sink;
use crate::setup::{self, ModelArgs};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// group-testing, linear, probit, missing or tabular.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model_args: ModelArgs,
}

fn failure(what: &str, v: &Verdict) -> String {
    let half = (v.ci_hi - v.ci_lo) / 2.0;
    let hint = if half >= -v.margin {
        "the interval is wide compared with the miss; more trials may resolve it"
    } else {
        "the interval is narrow compared with the miss, which points to a defect rather than too few trials"
    };
    format!(
        "{what}: empirical {:.6} with 95% interval [{:.6}, {:.6}] lies above the bound {:.6} (margin {:.3e}); {hint}",
        v.empirical_pe, v.ci_lo, v.ci_hi, v.bound, v.margin
    )
}

pub fn run(a: SimulateArgs, res: &mut Resolver, sink: &Sink) -> Result<(), CliError> {
    let model = res.get("model", a.model.clone(), "group-testing".to_string())?;
    let n = res.require("n", a.n)?;
    let k = res.require("k", a.k)?;
    let t = res.require("t", a.t)?;
    let trials = res.get("trials", a.trials, 10_000u64)?;
    let seed = res.get("seed", a.seed, 0u64)?;
    let s = setup::build(res, &model, &a.model_args, k, Some(t))?;
    res.finish()?;
    let dims = ProblemDims::new(n, k, t)?;

    let bound = finite_size_error_bound(&dims, &s.model, &s.q, &s.prior, RhoStrategy::Optimize)?;
    let mut report = run_trials(&s.model, &s.q, &s.prior, &dims, trials, seed)?;
    report.analytic_union_bound = Some(bound.union_bound);

    let mut failures = Vec::new();
    let checks = if trials < 2 {
        res.note("a single trial cannot test containment; validation skipped");
        eprintln!("warning: with one trial the bound is not validated");
        None
    } else {
        let total = validate_bound(&report, &dims, &s.model.id(), bound.union_bound)?;
        let per_i = validate_per_i(&report, &bound)?;
        if !total.passes {
            failures.push(failure("total error", &total));
        }
        for (i, v) in &per_i {
            if !v.passes {
                failures.push(failure(&format!("errors with {i} wrong indices"), v));
            }
        }
        Some((total, per_i))
    };

    let result = json!({
        "report": report,
        "bound": bound,
        "validation": checks.as_ref().map(|(total, per_i)| json!({
            "total": total,
            "per_i": per_i.iter().map(|(i, v)| json!({ "i": i, "verdict": v })).collect::<Vec<_>>(),
        })),
    });
    sink.emit_main(res, "simulate", result, &campaign_csv(std::slice::from_ref(&report)))?;

    let mut txt = format!(
        "{} trials: {} errors, P_e = {:.6} [{:.6}, {:.6}], union bound {:.6e}\n",
        report.trials, report.errors_total, report.empirical_pe, report.ci_lo, report.ci_hi, bound.union_bound
    );
    if let Some((_, per_i)) = &checks {
        for (i, v) in per_i {
            txt.push_str(&format!(
                "  i = {i}: {:.6} [{:.6}, {:.6}] vs {:.6e} {}\n",
                v.empirical_pe,
                v.ci_lo,
                v.ci_hi,
                v.bound,
                if v.passes { "PASS" } else { "FAIL" }
            ));
        }
        txt.push_str(if failures.is_empty() { "bound contained: PASS\n" } else { "bound contained: FAIL\n" });
    }
    sink.summary(&txt);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failures.join("; ")))
    }
}
