use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde_json::json;
use stackelberg::fisher::{
    allocation_rows, check_equilibrium, demand_all, generate_market, nested_tatonnement, tatonnement, FisherMarket,
    MarketSpec,
};
use stackelberg::fixtures::by_name;
use stackelberg::game::{check_stackelberg, OuterReference};
use stackelberg::harness::{run_experiment, ExperimentConfig};
use stackelberg::plot::{render_svg, Axes, PlotSpec, Series};
use stackelberg::polynomial::PolynomialGame;
use stackelberg::solvers::{max_oracle_gd, nested_gda};
use stackelberg::{Error, Game, InnerOracle, ProjectedAscentOracle, SolverConfig, SolverResult, StepSchedule};

use crate::{Algo, CheckArgs, Cli, Command, Decay, ExperimentArgs, GenMarketArgs, PlotArgs, SolveArgs};

/// Why a command did not succeed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or unreadable input (exit 2).
    Usage(anyhow::Error),
    /// The computation itself failed (exit 1).
    Runtime(anyhow::Error),
    /// A check ran and did not pass (exit 1, report already printed).
    Rejected,
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) | Failure::Rejected => 1,
        }
    }

    pub fn message(&self) -> Option<&anyhow::Error> {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => Some(e),
            Failure::Rejected => None,
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Validation-type library errors are the caller's fault.
fn classify(e: Error) -> Failure {
    match e {
        Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::Dimension { .. }
        | Error::Unsupported(_)
        | Error::Infeasible(_) => usage(e),
        _ => runtime(e),
    }
}

struct RunContext {
    seed: u64,
    out_dir: Option<PathBuf>,
    tol: f64,
}

impl RunContext {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) => dir.join(path),
            None => path.to_path_buf(),
        }
    }

    fn write(&self, path: &Path, contents: &str) -> Outcome<PathBuf> {
        let path = self.resolve(path);
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))
                .map_err(runtime)?;
        }
        fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime)?;
        Ok(path)
    }
}

fn read_input(path: &Path) -> Outcome<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)
}

fn load_market(path: &Path) -> Outcome<FisherMarket> {
    let (market, warnings) = FisherMarket::from_json(&read_input(path)?)
        .with_context(|| format!("loading market {}", path.display()))
        .map_err(usage)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(market)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    serde_json::from_str(&read_input(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

pub fn run(cli: Cli) -> Outcome {
    if cli.tol.is_nan() || cli.tol < 0.0 {
        return Err(usage(anyhow!("--tol must be nonnegative")));
    }
    let ctx = RunContext {
        seed: cli.seed,
        out_dir: cli.out_dir,
        tol: cli.tol,
    };
    match cli.command {
        Command::GenMarket(a) => gen_market(&ctx, a),
        Command::Solve(a) => solve(&ctx, a),
        Command::Check(a) => check(&ctx, a),
        Command::Experiment(a) => experiment(&ctx, a),
        Command::Plot(a) => plot(&ctx, a),
    }
}

fn gen_market(ctx: &RunContext, a: GenMarketArgs) -> Outcome {
    let spec = MarketSpec::standard(a.utility);
    let market = generate_market(a.buyers, a.goods, ctx.seed, spec.budget_range, spec.valuation_range, a.utility)
        .map_err(classify)?;
    let text = market.to_json() + "\n";
    match a.out {
        Some(out) => println!("{}", ctx.write(&out, &text)?.display()),
        None => print!("{text}"),
    }
    Ok(())
}

enum Subject {
    Game(Game, Box<dyn InnerOracle>),
    Market(FisherMarket),
}

fn solve(ctx: &RunContext, a: SolveArgs) -> Outcome {
    let subject = if let Some(name) = &a.fixture {
        let (game, oracle) = by_name(name).ok_or_else(|| usage(anyhow!("unknown fixture `{name}`")))?;
        Subject::Game(game, oracle)
    } else if let Some(path) = &a.market {
        Subject::Market(load_market(path)?)
    } else if let Some(path) = &a.game {
        let game = PolynomialGame::from_json(&read_input(path)?)
            .with_context(|| format!("loading game {}", path.display()))
            .map_err(usage)?
            .to_game();
        Subject::Game(game, Box::new(ProjectedAscentOracle::default()))
    } else {
        return Err(usage(anyhow!("one of --fixture, --market or --game is required")));
    };
    let is_market = matches!(subject, Subject::Market(_));
    let eta = a.eta.unwrap_or(if is_market { 5.0 } else { 0.5 });
    let eta_inner = a.eta_inner.unwrap_or(if is_market { 5.0 } else { 0.5 });
    let schedule = match a.decay {
        Decay::Const => StepSchedule::constant(eta),
        Decay::Sqrt => StepSchedule::sqrt_decay(eta),
        Decay::Strong => StepSchedule::strongly_convex(a.mu),
    }
    .map_err(classify)?;
    let mut config = SolverConfig::new(a.iters, schedule)
        .with_inner(a.t_inner, StepSchedule::constant(eta_inner).map_err(classify)?)
        .with_seed(ctx.seed);
    if let Some(x0) = a.x0.clone() {
        let dim = match &subject {
            Subject::Game(g, _) => g.dim_outer(),
            Subject::Market(m) => m.n_goods(),
        };
        if x0.len() != dim {
            return Err(usage(anyhow!("--x0 has {} entries, expected {dim}", x0.len())));
        }
        config = config.with_x0(x0);
    }
    config.validate().map_err(classify)?;

    let result: SolverResult = match (&subject, a.algo) {
        (Subject::Game(g, oracle), Algo::MaxOracle) => max_oracle_gd(g, oracle.as_ref(), &config),
        (Subject::Game(g, _), Algo::Nested) => nested_gda(g, &config),
        (Subject::Market(m), Algo::MaxOracle) => tatonnement(m, &config),
        (Subject::Market(m), Algo::Nested) => nested_tatonnement(m, &config),
    };
    let traj = match result {
        Ok(t) => t,
        Err(failure) => {
            let path = ctx.write(&a.out, &failure.partial.to_csv(a.coords))?;
            return Err(runtime(anyhow!(
                "{failure} (partial trajectory with {} rows written to {})",
                failure.partial.len(),
                path.display()
            )));
        }
    };
    let path = ctx.write(&a.out, &traj.to_csv(a.coords))?;
    let mut summary = json!({
        "iterations": traj.len(),
        "best_iteration": traj.best_index + 1,
        "best_objective": traj.best_objective(),
        "best_x": traj.best_x(),
        "best_y": traj.best_y(),
        "final_objective": traj.final_objective,
        "final_x": traj.final_x,
        "trajectory": path.display().to_string(),
    });
    if let Subject::Market(m) = &subject {
        let rows = allocation_rows(&traj.final_y, m.n_goods());
        let report = check_equilibrium(m, &traj.final_x, &rows, ctx.tol);
        summary["equilibrium"] = serde_json::to_value(report).map_err(runtime)?;
    }
    println!("{}", serde_json::to_string_pretty(&summary).map_err(runtime)?);
    Ok(())
}

fn check(ctx: &RunContext, a: CheckArgs) -> Outcome {
    let (report, passed) = if let Some(path) = &a.market {
        let market = load_market(path)?;
        let prices_path = a.prices.as_ref().ok_or_else(|| usage(anyhow!("--prices is required with --market")))?;
        let prices: Vec<f64> = read_json(prices_path)?;
        if prices.len() != market.n_goods() {
            return Err(usage(anyhow!("{} prices for {} goods", prices.len(), market.n_goods())));
        }
        if prices.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(usage(anyhow!("prices must be finite and nonnegative")));
        }
        let (allocation, source) = match &a.allocation {
            Some(path) => {
                let rows: Vec<Vec<f64>> = read_json(path)?;
                if rows.len() != market.n_buyers() || rows.iter().any(|r| r.len() != market.n_goods()) {
                    return Err(usage(anyhow!(
                        "allocation must be {} rows of {} entries",
                        market.n_buyers(),
                        market.n_goods()
                    )));
                }
                (rows, "given")
            }
            // unbounded demand at a zero price leaves empty rows, which the check scores as a full gap
            None => match demand_all(&market, &prices) {
                Ok(ds) => (ds.into_iter().map(|d| d.x).collect(), "demand"),
                Err(_) => (vec![Vec::new(); market.n_buyers()], "demand"),
            },
        };
        let report = check_equilibrium(&market, &prices, &allocation, ctx.tol);
        let passed = report.passed;
        let mut value = serde_json::to_value(report).map_err(runtime)?;
        value["allocation"] = json!(source);
        (value, passed)
    } else if let Some(name) = &a.fixture {
        let (game, oracle) = by_name(name).ok_or_else(|| usage(anyhow!("unknown fixture `{name}`")))?;
        let (x, y) = (a.x.unwrap_or_default(), a.y.unwrap_or_default());
        let report = check_stackelberg(
            &game,
            &x,
            &y,
            ctx.tol,
            ctx.tol,
            oracle.as_ref(),
            OuterReference::Grid {
                resolution: a.resolution,
            },
        )
        .map_err(classify)?;
        let passed = report.is_equilibrium;
        (serde_json::to_value(report).map_err(runtime)?, passed)
    } else {
        return Err(usage(anyhow!("one of --market or --fixture is required")));
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    if passed {
        Ok(())
    } else {
        Err(Failure::Rejected)
    }
}

fn experiment(ctx: &RunContext, a: ExperimentArgs) -> Outcome {
    let mut config = ExperimentConfig::new(a.utility, ctx.seed);
    config.n_markets = a.markets;
    config.n_buyers = a.buyers;
    config.n_goods = a.goods;
    if let Some(iters) = a.iters {
        config.iters = iters;
    }
    config.inner_iters = a.t_inner;
    config.start_prices = a.start;
    config.reference_factor = (a.reference_factor > 0).then_some(a.reference_factor);
    config.record_runtime = a.record_runtime;
    config.threads = a.threads;
    config.validate().map_err(classify)?;

    let result = run_experiment(&config).map_err(runtime)?;
    let outputs = result.outputs().map_err(runtime)?;
    for (name, contents) in [
        ("results.csv", &outputs.results_csv),
        ("mean_trajectory.csv", &outputs.mean_trajectory_csv),
        ("summary.json", &outputs.summary_json),
        ("convergence.svg", &outputs.convergence_svg),
    ] {
        println!("{}", ctx.write(Path::new(name), contents)?.display());
    }
    for (k, algo, msg) in result.failure_messages() {
        eprintln!("warning: market {k} ({algo}) failed: {msg}");
    }
    if result.failures >= 2 * config.n_markets {
        return Err(runtime(anyhow!("every run failed")));
    }
    Ok(())
}

/// Splits `label=path[:column]`.
fn parse_series_arg(arg: &str) -> Outcome<(String, PathBuf, Option<String>)> {
    let (label, rest) = arg
        .split_once('=')
        .filter(|(l, r)| !l.is_empty() && !r.is_empty())
        .ok_or_else(|| usage(anyhow!("series `{arg}` is not of the form label=path[:column]")))?;
    let (path, column) = match rest.rsplit_once(':') {
        Some((p, c)) if !p.is_empty() && !c.is_empty() && !c.contains(['/', '\\']) => (p, Some(c.to_string())),
        _ => (rest, None),
    };
    Ok((label.to_string(), PathBuf::from(path), column))
}

fn read_series(path: &Path, column: Option<&str>) -> Outcome<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(usage)?;
    let headers = reader.headers().map_err(usage)?.clone();
    let index = match column {
        Some(c) => headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| usage(anyhow!("{} has no column `{c}`", path.display())))?,
        None => headers
            .iter()
            .position(|h| h == "best_objective")
            .unwrap_or(headers.len().saturating_sub(1)),
    };
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(usage)?;
        let field = record.get(index).unwrap_or("");
        let v: f64 = field
            .trim()
            .parse()
            .with_context(|| format!("{} row {}: `{field}` is not a number", path.display(), line + 1))
            .map_err(usage)?;
        values.push(v);
    }
    Ok(values)
}

fn plot(ctx: &RunContext, a: PlotArgs) -> Outcome {
    let mut series = Vec::new();
    for arg in &a.series {
        let (label, path, column) = parse_series_arg(arg)?;
        let mut values = read_series(&path, column.as_deref())?;
        if values.is_empty() {
            return Err(usage(anyhow!("series `{label}` ({}) is empty", path.display())));
        }
        if let Some(r) = a.gap_ref {
            values.iter_mut().for_each(|v| *v -= r);
        }
        series.push(Series { label, values });
    }
    let spec = PlotSpec {
        series,
        reference_rate: a.reference_rate,
        title: a.title,
        axes: if a.linear { Axes::Linear } else { Axes::LogLog },
    };
    let svg = render_svg(&spec).map_err(usage)?;
    println!("{}", ctx.write(&a.out, &svg)?.display());
    Ok(())
}
