//! Batch Fisher-market experiments: seeded market generation, paired
//! tâtonnement / nested tâtonnement runs, aggregation and CSV export.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::plot::{render_svg, Axes, PlotSpec, Series};
use crate::fisher::{check_equilibrium, nested_tatonnement, tatonnement, FisherMarket, MarketSpec, UtilityKind};
use crate::solvers::trajectory::fmt_f64;
use crate::solvers::{fit_power_law, SolverConfig, StepSchedule, Trajectory};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "STACKELBERG_THREADS";

pub const ALGO_MOGD: &str = "mogd";
pub const ALGO_NGD: &str = "ngd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPrices {
    /// `U[50, 55]` per good.
    High,
    /// `U[5, 15]` per good.
    Low,
}

impl StartPrices {
    pub fn range(self) -> (f64, f64) {
        match self {
            StartPrices::High => (50.0, 55.0),
            StartPrices::Low => (5.0, 15.0),
        }
    }
}

impl std::str::FromStr for StartPrices {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" => Ok(StartPrices::High),
            "low" => Ok(StartPrices::Low),
            _ => Err(Error::Parse(format!("unknown start prices `{s}` (expected high or low)"))),
        }
    }
}

/// Default outer iteration count for a utility family.
pub fn default_iters(utility: UtilityKind) -> usize {
    match utility {
        UtilityKind::Linear => 500,
        UtilityKind::CobbDouglas => 300,
        UtilityKind::Leontief => 700,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub utility: UtilityKind,
    pub n_markets: usize,
    pub n_buyers: usize,
    pub n_goods: usize,
    pub iters: usize,
    pub inner_iters: usize,
    pub start_prices: StartPrices,
    pub outer_schedule: StepSchedule,
    pub inner_schedule: StepSchedule,
    pub seed: u64,
    /// When set, each market also gets an exact-oracle run of
    /// `factor * iters` steps whose best objective serves as `v*` for rate fits.
    pub reference_factor: Option<usize>,
    /// Record wall-clock runtimes; off by default so exports are reproducible.
    pub record_runtime: bool,
    /// Worker cap; falls back to `STACKELBERG_THREADS`, then all cores.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(utility: UtilityKind, seed: u64) -> Self {
        ExperimentConfig {
            utility,
            n_markets: 20,
            n_buyers: 5,
            n_goods: 8,
            iters: default_iters(utility),
            inner_iters: 50,
            start_prices: StartPrices::High,
            outer_schedule: crate::fisher::preset_schedule(),
            inner_schedule: StepSchedule::Constant { base: 5.0 },
            seed,
            reference_factor: None,
            record_runtime: false,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_markets == 0 {
            return Err(Error::InvalidArgument("n_markets must be >= 1".into()));
        }
        if self.iters == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if self.n_buyers == 0 || self.n_goods == 0 {
            return Err(Error::InvalidArgument("need at least one buyer and one good".into()));
        }
        if self.reference_factor == Some(0) {
            return Err(Error::InvalidArgument("reference factor must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("thread count must be >= 1".into()));
        }
        self.outer_schedule.validate(self.iters)?;
        self.inner_schedule.validate(self.inner_iters)
    }

    pub fn market_spec(&self) -> MarketSpec {
        MarketSpec {
            n_buyers: self.n_buyers,
            n_goods: self.n_goods,
            ..MarketSpec::standard(self.utility)
        }
    }

    /// Market `k` and its starting prices, drawn from substream `k` of
    /// `seed`. Prices are drawn after the market, so high and low starts
    /// share markets.
    pub fn instance(&self, k: usize) -> Result<(FisherMarket, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        let market = self.market_spec().sample(&mut rng)?;
        let (lo, hi) = self.start_prices.range();
        let p0 = (0..self.n_goods).map(|_| rng.gen_range(lo..=hi)).collect();
        Ok((market, p0))
    }

    fn solver_config(&self, iters: usize, p0: &[f64]) -> SolverConfig {
        SolverConfig::new(iters, self.outer_schedule.clone())
            .with_inner(self.inner_iters, self.inner_schedule.clone())
            .with_x0(p0.to_vec())
    }

    #[cfg(feature = "parallel")]
    fn worker_count(&self) -> Option<usize> {
        self.threads.or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|n| *n > 0)
        })
    }
}

/// Outcome of one solver on one market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_objective: f64,
    pub clearing_residual: f64,
    pub buyer_gap: f64,
    pub runtime_ms: f64,
    pub objective: Vec<f64>,
    pub best_objective: Vec<f64>,
    pub final_prices: Vec<f64>,
}

impl RunSummary {
    fn from_run(market: &FisherMarket, traj: &Trajectory, runtime_ms: f64) -> Self {
        let rows = crate::fisher::allocation_rows(&traj.final_y, market.n_goods());
        let report = check_equilibrium(market, &traj.final_x, &rows, 0.0);
        RunSummary {
            final_objective: traj.final_objective,
            clearing_residual: report.max_residual(),
            buyer_gap: report.max_buyer_gap,
            runtime_ms,
            objective: traj.objective.clone(),
            best_objective: traj.best_so_far(),
            final_prices: traj.final_x.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketOutcome {
    pub index: usize,
    pub mogd: std::result::Result<RunSummary, String>,
    pub ngd: std::result::Result<RunSummary, String>,
    /// Lowest exact-oracle objective seen on this market, including the
    /// reference run; present only when a reference run was requested.
    pub v_star: Option<f64>,
}

impl MarketOutcome {
    pub fn failures(&self) -> usize {
        usize::from(self.mogd.is_err()) + usize::from(self.ngd.is_err())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub markets: Vec<MarketOutcome>,
    pub mean_objective_mogd: Vec<f64>,
    pub mean_objective_ngd: Vec<f64>,
    pub failures: usize,
}

fn timed<T>(record: bool, f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    let ms = if record { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    (out, ms)
}

fn run_market(config: &ExperimentConfig, k: usize) -> MarketOutcome {
    let (market, p0) = match config.instance(k) {
        Ok(v) => v,
        Err(e) => {
            return MarketOutcome {
                index: k,
                mogd: Err(e.to_string()),
                ngd: Err(e.to_string()),
                v_star: None,
            }
        }
    };
    let solver = config.solver_config(config.iters, &p0);
    let (mogd, t1) = timed(config.record_runtime, || tatonnement(&market, &solver));
    let (ngd, t2) = timed(config.record_runtime, || nested_tatonnement(&market, &solver));
    let mogd = mogd.map(|t| RunSummary::from_run(&market, &t, t1)).map_err(|e| e.to_string());
    let ngd = ngd.map(|t| RunSummary::from_run(&market, &t, t2)).map_err(|e| e.to_string());

    let v_star = config.reference_factor.map(|factor| {
        let reference = tatonnement(&market, &config.solver_config(factor * config.iters, &p0))
            .map(|t| t.best_objective())
            .unwrap_or(f64::INFINITY);
        // nested runs report f(p, x) with x below the inner optimum, so only
        // exact-oracle values bound V from above
        mogd.as_ref()
            .ok()
            .and_then(|r| r.best_objective.last().copied())
            .map_or(reference, |b| b.min(reference))
    });
    MarketOutcome {
        index: k,
        mogd,
        ngd,
        v_star,
    }
}

#[cfg(feature = "parallel")]
fn run_all(config: &ExperimentConfig) -> Vec<MarketOutcome> {
    use rayon::prelude::*;
    let work = || {
        (0..config.n_markets)
            .into_par_iter()
            .map(|k| run_market(config, k))
            .collect::<Vec<_>>()
    };
    match config.worker_count() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(_) => (0..config.n_markets).map(|k| run_market(config, k)).collect(),
        },
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_all(config: &ExperimentConfig) -> Vec<MarketOutcome> {
    (0..config.n_markets).map(|k| run_market(config, k)).collect()
}

/// Runs both solvers from identical starting prices on every market.
/// Individual failures are recorded, not propagated.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    // collected in market order regardless of scheduling
    let markets = run_all(config);
    let collect = |pick: fn(&MarketOutcome) -> Option<&RunSummary>| -> Vec<Vec<f64>> {
        markets.iter().filter_map(pick).map(|r| r.objective.clone()).collect()
    };
    let mogd = collect(|m| m.mogd.as_ref().ok());
    let ngd = collect(|m| m.ngd.as_ref().ok());
    let mean_or_nan = |rows: &[Vec<f64>]| {
        if rows.is_empty() {
            Ok(vec![f64::NAN; config.iters])
        } else {
            mean_trajectory(rows)
        }
    };
    Ok(ExperimentResult {
        mean_objective_mogd: mean_or_nan(&mogd)?,
        mean_objective_ngd: mean_or_nan(&ngd)?,
        failures: markets.iter().map(MarketOutcome::failures).sum(),
        markets,
        config: config.clone(),
    })
}

/// Pointwise mean of equal-length trajectories.
pub fn mean_trajectory(trajectories: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidArgument("no trajectories to average".into()))?;
    let len = first.len();
    if let Some(bad) = trajectories.iter().find(|t| t.len() != len) {
        return Err(Error::Dimension {
            what: "trajectory length",
            expected: len,
            got: bad.len(),
        });
    }
    let n = trajectories.len() as f64;
    Ok((0..len)
        .map(|t| trajectories.iter().map(|row| row[t]).sum::<f64>() / n)
        .collect())
}

/// Descriptive statistics for paired samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareSummary {
    pub n: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub stdev_a: f64,
    pub stdev_b: f64,
    /// Mean of `a - b`.
    pub mean_difference: f64,
    pub stdev_difference: f64,
    /// 95% Student-t interval for the mean paired difference.
    pub ci_low: f64,
    pub ci_high: f64,
}

fn mean_stdev(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn compare_finals(a: &[f64], b: &[f64]) -> Result<CompareSummary> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "paired samples",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("no samples to compare".into()));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean_a, stdev_a) = mean_stdev(a);
    let (mean_b, stdev_b) = mean_stdev(b);
    let (mean_difference, stdev_difference) = mean_stdev(&diff);
    let half = if a.len() < 2 || stdev_difference == 0.0 {
        0.0
    } else {
        let dof = (a.len() - 1) as f64;
        let q = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .inverse_cdf(0.975);
        q * stdev_difference / (a.len() as f64).sqrt()
    };
    Ok(CompareSummary {
        n: a.len(),
        mean_a,
        mean_b,
        stdev_a,
        stdev_b,
        mean_difference,
        stdev_difference,
        ci_low: mean_difference - half,
        ci_high: mean_difference + half,
    })
}

/// Slope fits of the mean best-objective gap `mean_k (best_k(t) - v*_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSummary {
    pub slope_mogd: f64,
    pub slope_ngd: f64,
}

impl ExperimentResult {
    /// Paired final objectives of markets where both runs succeeded.
    pub fn paired_finals(&self) -> (Vec<f64>, Vec<f64>) {
        self.markets
            .iter()
            .filter_map(|m| match (&m.mogd, &m.ngd) {
                (Ok(a), Ok(b)) => Some((a.final_objective, b.final_objective)),
                _ => None,
            })
            .unzip()
    }

    pub fn compare(&self) -> Result<CompareSummary> {
        let (a, b) = self.paired_finals();
        compare_finals(&a, &b)
    }

    /// Mean best-objective gap per iteration for one algorithm; needs a
    /// reference value on every included market.
    pub fn mean_gap(&self, algo: &str) -> Result<Vec<f64>> {
        let mut rows = Vec::new();
        for m in &self.markets {
            let run = if algo == ALGO_NGD { &m.ngd } else { &m.mogd };
            let (Ok(run), Some(v)) = (run, m.v_star) else { continue };
            rows.push(run.best_objective.iter().map(|b| b - v).collect::<Vec<f64>>());
        }
        if rows.is_empty() {
            return Err(Error::InvalidArgument("no runs with a reference value".into()));
        }
        mean_trajectory(&rows)
    }

    pub fn rates(&self) -> Result<RateSummary> {
        Ok(RateSummary {
            slope_mogd: fit_power_law(&self.mean_gap(ALGO_MOGD)?).slope,
            slope_ngd: fit_power_law(&self.mean_gap(ALGO_NGD)?).slope,
        })
    }

    /// `seed,algo,final_objective,clearing_residual,buyer_gap,runtime_ms`,
    /// one row per successful run; `seed` is the market's substream index.
    pub fn results_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["seed", "algo", "final_objective", "clearing_residual", "buyer_gap", "runtime_ms"])?;
        for m in &self.markets {
            for (name, run) in [(ALGO_MOGD, &m.mogd), (ALGO_NGD, &m.ngd)] {
                if let Ok(r) = run {
                    w.write_record([
                        m.index.to_string(),
                        name.to_string(),
                        fmt_f64(r.final_objective),
                        fmt_f64(r.clearing_residual),
                        fmt_f64(r.buyer_gap),
                        fmt_f64(r.runtime_ms),
                    ])?;
                }
            }
        }
        finish(w)
    }

    /// `iter,mean_objective_mogd,mean_objective_ngd`.
    pub fn mean_trajectory_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iter", "mean_objective_mogd", "mean_objective_ngd"])?;
        for (t, (a, b)) in self.mean_objective_mogd.iter().zip(&self.mean_objective_ngd).enumerate() {
            w.write_record([(t + 1).to_string(), fmt_f64(*a), fmt_f64(*b)])?;
        }
        finish(w)
    }

    /// Failures as `(market index, algorithm, message)`.
    pub fn failure_messages(&self) -> Vec<(usize, &'static str, &str)> {
        let mut out = Vec::new();
        for m in &self.markets {
            for (name, run) in [(ALGO_MOGD, &m.mogd), (ALGO_NGD, &m.ngd)] {
                if let Err(e) = run {
                    out.push((m.index, name, e.as_str()));
                }
            }
        }
        out
    }
}

/// Everything `experiment` writes, rendered in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentOutputs {
    pub results_csv: String,
    pub mean_trajectory_csv: String,
    pub summary_json: String,
    pub convergence_svg: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    markets: usize,
    failures: usize,
    failure_messages: Vec<String>,
    finals: Option<CompareSummary>,
    rates: Option<RateSummary>,
    final_mean_objective_mogd: Option<f64>,
    final_mean_objective_ngd: Option<f64>,
}

impl ExperimentResult {
    pub fn summary_json(&self) -> Result<String> {
        let summary = Summary {
            config: &self.config,
            markets: self.markets.len(),
            failures: self.failures,
            failure_messages: self
                .failure_messages()
                .into_iter()
                .map(|(k, algo, msg)| format!("market {k} ({algo}): {msg}"))
                .collect(),
            finals: self.compare().ok(),
            rates: self.rates().ok(),
            final_mean_objective_mogd: self.mean_objective_mogd.last().copied(),
            final_mean_objective_ngd: self.mean_objective_ngd.last().copied(),
        };
        Ok(serde_json::to_string_pretty(&summary)? + "\n")
    }

    /// Mean objective trajectories of both algorithms on linear axes with a
    /// dashed `t^-1/2` reference.
    pub fn convergence_plot(&self) -> Result<String> {
        let spec = PlotSpec {
            series: vec![
                Series {
                    label: "tatonnement".into(),
                    values: self.mean_objective_mogd.clone(),
                },
                Series {
                    label: "nested tatonnement".into(),
                    values: self.mean_objective_ngd.clone(),
                },
            ],
            reference_rate: Some(-0.5),
            title: format!(
                "{} markets, {} utilities, mean objective",
                self.config.n_markets,
                self.config.utility.name()
            ),
            axes: Axes::Linear,
        };
        render_svg(&spec)
    }

    pub fn outputs(&self) -> Result<ExperimentOutputs> {
        Ok(ExperimentOutputs {
            results_csv: self.results_csv()?,
            mean_trajectory_csv: self.mean_trajectory_csv()?,
            summary_json: self.summary_json()?,
            convergence_svg: self.convergence_plot()?,
        })
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_constant_rows() {
        let m = mean_trajectory(&[vec![0.0; 4], vec![2.0; 4]]).unwrap();
        assert_eq!(m, vec![1.0; 4]);
        let one = vec![1.0, 5.0, -2.0];
        assert_eq!(mean_trajectory(std::slice::from_ref(&one)).unwrap(), one);
        assert_eq!(mean_trajectory(&[one.clone(), one.clone()]).unwrap(), one);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(mean_trajectory(&[vec![0.0; 3], vec![0.0; 4]]).is_err());
        assert!(mean_trajectory(&[]).is_err());
    }

    #[test]
    fn compare_identical_and_shifted() {
        let a = [1.0, 4.0, 2.5, 7.0];
        let s = compare_finals(&a, &a).unwrap();
        assert_eq!(s.mean_difference, 0.0);
        let b: Vec<f64> = a.iter().map(|x| x - 1.0).collect();
        let s = compare_finals(&a, &b).unwrap();
        assert!((s.mean_difference - 1.0).abs() < 1e-12);
        assert!(s.stdev_difference.abs() < 1e-12);
        assert!(compare_finals(&a, &b[..2]).is_err());
    }

    #[test]
    fn instances_share_markets_across_start_conditions() {
        let mut cfg = ExperimentConfig::new(UtilityKind::Linear, 3);
        let (m_high, p_high) = cfg.instance(2).unwrap();
        cfg.start_prices = StartPrices::Low;
        let (m_low, p_low) = cfg.instance(2).unwrap();
        assert_eq!(m_high, m_low);
        assert!(p_high.iter().all(|p| (50.0..=55.0).contains(p)));
        assert!(p_low.iter().all(|p| (5.0..=15.0).contains(p)));
    }
}
