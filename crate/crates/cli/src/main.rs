//! `collector`: batch front end for growth-rate estimation, bounds, sweeps and
//! reference-value checks.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CommonArgs, MethodArg};

const CSV_HELP: &str = "\
CSV output (first line is a comment `# collector-csv schema=1 table=<name>`):
  estimate / bounds table:
    lambda      fraction of capital invested per period
    theta       fraction of the collection sold per period
    method      estimator name, or bound:<name> for bounds rows
    value       estimate of the growth rate nu (or the bound)
    cert_type   exact | stderr | analytic | one_sided | none
    cert_value  stderr, deterministic error bound, or one-sided bias
    iterations  work count of the estimator (0 for bounds)
    seed        stream seed
  heatmap table:
    lambda, theta  grid cell i/(res+1), j/(res+1)
    nu             cell estimate (nan when the estimator failed)
    cert           certificate value of the cell estimate
    iters          work count of the cell estimate
  meanfield table:
    n              step
    u, v           expected capital and collection
    alpha_u_plus_v E[eps]*u + v, constant when gamma = 1

Environment: COLLECTOR_SEED sets the default seed.
Exit codes: 0 ok, 1 verification failure, 2 usage or config error, 3 numeric failure.";

#[derive(Parser, Debug)]
#[command(name = "collector", version, about = "Growth rates of the two-asset collector model", after_help = CSV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate nu at one policy with one or more methods.
    #[command(after_help = CSV_HELP)]
    Estimate(EstimateArgs),
    /// Sweep the interior policy grid.
    #[command(after_help = CSV_HELP)]
    Heatmap(HeatmapArgs),
    /// Grid sweep, local refinement and the interior-versus-boundary decision.
    Optimize(OptimizeArgs),
    /// Lower and upper bounds on nu at one policy.
    #[command(after_help = CSV_HELP)]
    Bounds(BoundsArgs),
    /// Expected dynamics and the top eigenvalue of the mean matrix.
    #[command(after_help = CSV_HELP)]
    Meanfield(MeanfieldArgs),
    /// Check the published reference values.
    #[command(name = "verify-paper")]
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Estimators, comma separated [default: auto].
    #[arg(long, value_enum, value_delimiter = ',')]
    method: Vec<MethodArg>,
    /// Transfer-operator iterations, or fixed steps for direct simulation.
    #[arg(long)]
    iters: Option<u64>,
    /// Relative stopping tolerance.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Replications or Monte Carlo draws.
    #[arg(long)]
    replications: Option<usize>,
    /// Continued-fraction or ratio depth.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Debug)]
pub struct HeatmapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Interior cells per side [default: 50].
    #[arg(long)]
    resolution: Option<usize>,
    /// Cell estimator: auto, transfer or direct.
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    /// Relative stopping tolerance per cell [default: 1e-4].
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Also render a PNG; non-positive cells are white.
    #[arg(long)]
    png: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Interior cells per side of the coarse grid [default: 20].
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Step halvings of the local search.
    #[arg(long, default_value_t = 4)]
    levels: usize,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Monte Carlo draws when the law cannot be enumerated.
    #[arg(long, default_value_t = 400_000)]
    draws: usize,
}

#[derive(Args, Debug)]
pub struct MeanfieldArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// E[eps]; with --beta overrides the stream moments.
    #[arg(long)]
    alpha: Option<f64>,
    /// E[delta].
    #[arg(long)]
    beta: Option<f64>,
    /// E[eps*delta] [default: alpha*beta].
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    #[arg(long, default_value_t = 1.0)]
    v0: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numeric(String),
    Verification(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Io(m) => write!(f, "output: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Verification(n) => write!(f, "{n} verification check(s) failed"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Heatmap(a) => commands::heatmap(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Meanfield(a) => commands::meanfield(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("collector: {e}");
            ExitCode::from(e.code())
        }
    }
}
