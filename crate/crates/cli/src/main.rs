//! `sparsebound`: sample-complexity bounds, figures, simulations and exponent curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cmd;
mod config;
mod error;
mod output;
mod setup;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::Resolver;
use error::CliError;
use output::{resolve_out_dir, Format, Sink};

#[derive(Debug, Parser)]
#[command(name = "sparsebound", version, about = "Sample-complexity bounds for sparse support recovery")]
struct Cli {
    /// `key = value` file. Flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (also `SPARSEBOUND_OUT_DIR`). Without one, results go to standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Omit timestamps and timings so that reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Necessity and sufficiency thresholds for one model.
    Bounds(cmd::bounds::BoundsArgs),
    /// Regenerate a figure's data series (`cs` or `gt`).
    Figure(cmd::figure::FigureArgs),
    /// Monte-Carlo ML decoding checked against the finite-size bound.
    Simulate(cmd::simulate::SimulateArgs),
    /// Error-exponent curve with derivative and curvature diagnostics.
    Exponent(cmd::exponent::ExponentArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bounds(_) => "bounds",
            Command::Figure(_) => "figure",
            Command::Simulate(_) => "simulate",
            Command::Exponent(_) => "exponent",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    let name = cli.command.name();
    let mut res = Resolver::load(cli.config.as_deref(), name)?;
    let format = res.get("format", cli.format.map(|f| f.to_string()), "json".to_string())?;
    let format: Format = format.parse().map_err(CliError::Config)?;
    let sink = Sink::new(name, format, resolve_out_dir(cli.out.as_deref()), cli.deterministic);
    match cli.command {
        Command::Bounds(a) => cmd::bounds::run(a, &mut res, &sink),
        Command::Figure(a) => cmd::figure::run(a, &mut res, &sink),
        Command::Simulate(a) => cmd::simulate::run(a, &mut res, &sink),
        Command::Exponent(a) => cmd::exponent::run(a, &mut res, &sink),
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
