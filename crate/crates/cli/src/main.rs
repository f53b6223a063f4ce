use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use stackelberg::fisher::UtilityKind;
use stackelberg::fixtures::FIXTURE_NAMES;
use stackelberg::harness::StartPrices;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "stackelberg", version, about = "Min-max Stackelberg game solvers and Fisher market experiments")]
struct Cli {
    /// Seed for market generation, random starts and experiments.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory for output files; relative output paths resolve against it.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Tolerance for equilibrium checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random Fisher market as JSON.
    GenMarket(GenMarketArgs),
    /// Run a solver on a fixture, a market or a polynomial game.
    Solve(SolveArgs),
    /// Check a candidate equilibrium and print a JSON report.
    Check(CheckArgs),
    /// Run paired tatonnement experiments over random markets.
    Experiment(ExperimentArgs),
    /// Render trajectory CSVs as an SVG plot.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct GenMarketArgs {
    #[arg(long, default_value_t = 5)]
    buyers: usize,
    #[arg(long, default_value_t = 8)]
    goods: usize,
    #[arg(long, default_value = "linear")]
    utility: UtilityKind,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    /// Exact inner oracle (tatonnement for markets).
    MaxOracle,
    /// Inner gradient ascent (nested tatonnement for markets).
    Nested,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Decay {
    Const,
    Sqrt,
    Strong,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["fixture", "market", "game"])))]
struct SolveArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(FIXTURE_NAMES))]
    fixture: Option<String>,
    /// Market JSON file.
    #[arg(long)]
    market: Option<PathBuf>,
    /// Polynomial game JSON file.
    #[arg(long)]
    game: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "max-oracle")]
    algo: Algo,
    /// Base outer step size (default 5 for markets, 0.5 otherwise).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum, default_value = "sqrt")]
    decay: Decay,
    /// Strong convexity modulus for `--decay strong`.
    #[arg(long, default_value_t = 2.0)]
    mu: f64,
    /// Outer iterations.
    #[arg(short = 'T', long = "iters", default_value_t = 500)]
    iters: usize,
    /// Inner ascent steps per outer iteration (nested only).
    #[arg(long, default_value_t = 50)]
    t_inner: usize,
    /// Constant inner step size (default 5 for markets, 0.5 otherwise).
    #[arg(long)]
    eta_inner: Option<f64>,
    /// Starting outer point (prices for markets), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Trajectory CSV path.
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
    /// Add iterate coordinates to the CSV.
    #[arg(long)]
    coords: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("subject").required(true).args(["market", "fixture"])))]
struct CheckArgs {
    /// Market JSON file.
    #[arg(long, requires = "prices")]
    market: Option<PathBuf>,
    /// JSON array of prices.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// JSON matrix of allocations (buyers by goods); exact demand at the prices when omitted.
    #[arg(long)]
    allocation: Option<PathBuf>,
    #[arg(long, value_parser = PossibleValuesParser::new(FIXTURE_NAMES), requires_all = ["x", "y"])]
    fixture: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    /// Grid resolution for the outer minimum of fixture games.
    #[arg(long, default_value_t = 2001)]
    resolution: usize,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "cobb-douglas")]
    utility: UtilityKind,
    #[arg(long, default_value_t = 20)]
    markets: usize,
    #[arg(long, default_value_t = 5)]
    buyers: usize,
    #[arg(long, default_value_t = 8)]
    goods: usize,
    /// Outer iterations (500 linear, 300 cobb-douglas, 700 leontief by default).
    #[arg(short = 'T', long = "iters")]
    iters: Option<usize>,
    #[arg(long, default_value_t = 50)]
    t_inner: usize,
    /// Starting price range: high U[50,55] or low U[5,15].
    #[arg(long, default_value = "high")]
    start: StartPrices,
    /// Length multiple of the reference run used for gaps and rates; 0 disables it.
    #[arg(long, default_value_t = 10)]
    reference_factor: usize,
    /// Record wall-clock runtimes (makes results.csv nondeterministic).
    #[arg(long)]
    record_runtime: bool,
    /// Worker threads; defaults to STACKELBERG_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// `label=path[:column]`; the column defaults to best_objective, else the last one.
    #[arg(long = "series", required = true)]
    series: Vec<String>,
    /// Exponent of the dashed reference line, e.g. -0.5.
    #[arg(long, allow_hyphen_values = true)]
    reference_rate: Option<f64>,
    /// Subtract this value to plot gaps.
    #[arg(long, allow_hyphen_values = true)]
    gap_ref: Option<f64>,
    /// Linear axes instead of log-log.
    #[arg(long)]
    linear: bool,
    #[arg(long, default_value = "convergence")]
    title: String,
    #[arg(long, default_value = "plot.svg")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(msg) = f.message() {
                eprintln!("error: {msg:#}");
            }
            ExitCode::from(f.code())
        }
    }
}
