//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stackelberg::fisher::{
    allocation_rows, check_equilibrium, demand, fisher_game, preset_config, tatonnement, utility,
    utility_subgradient, FisherDemandOracle, FisherMarket, MarketSpec, UtilityKind,
};
use stackelberg::fixtures::{danskin, danskin_derivative, example1, DanskinOracle, Example1Oracle};
use stackelberg::game::{envelope_subgradient, max_min_value, min_max_value, value_function};
use stackelberg::harness::{run_experiment, ExperimentConfig, StartPrices};
use stackelberg::solvers::trajectory::prefix_min;
use stackelberg::solvers::{fit_power_law, max_oracle_gd};
use stackelberg::{KktOptions, SolverConfig, StepSchedule};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn toy_optimum() -> Outcome {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for seed in 0..5 {
        let cfg = SolverConfig::new(5000, StepSchedule::SqrtDecay { base: 0.5 }).with_seed(seed);
        let traj = max_oracle_gd(&example1(), &Example1Oracle::default(), &cfg).expect("run completes");
        worst.0 = worst.0.max((traj.best_x()[0] - 0.5).abs());
        worst.1 = worst.1.max((traj.best_objective() - 0.75).abs());
    }
    outcome(
        worst.0 <= 0.02 && worst.1 <= 0.01,
        format!("max |x - 0.5| = {:.3e}, max |value - 0.75| = {:.3e}", worst.0, worst.1),
    )
}

fn minimax_gap() -> Outcome {
    let g = example1();
    let min_max = min_max_value(&g, 2001).expect("grid evaluation");
    let max_min = max_min_value(&g, 2001).expect("grid evaluation");
    outcome(
        (min_max - 0.75).abs() <= 1e-3 && (max_min - 3.0).abs() <= 1e-3,
        format!("min-max {min_max:.6}, max-min {max_min:.6}"),
    )
}

fn envelope_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kkt = KktOptions::default();
    let mut worst_closed: f64 = 0.0;
    let e1 = example1();
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let sol = value_function(&e1, &[x], &Example1Oracle::default(), &kkt).expect("oracle");
        let s = envelope_subgradient(&e1, &[x], &sol).expect("subgradient")[0];
        worst_closed = worst_closed.max((s - (2.0 * x - 1.0)).abs());
    }
    let d = danskin();
    let mut sampled = 0;
    while sampled < 1000 {
        let x: f64 = rng.gen_range(-2.0..2.0);
        if (x + 0.5).abs() < 1e-3 {
            continue;
        }
        sampled += 1;
        let sol = value_function(&d, &[x], &DanskinOracle::default(), &kkt).expect("oracle");
        let s = envelope_subgradient(&d, &[x], &sol).expect("subgradient")[0];
        worst_closed = worst_closed.max((s - danskin_derivative(x)).abs());
    }

    let mut worst_fd: f64 = 0.0;
    let h = 1e-5;
    for _ in 0..50 {
        let m = MarketSpec {
            n_buyers: 3,
            n_goods: 3,
            budget_range: (0.5, 5.0),
            valuation_range: (0.2, 3.0),
            utility: UtilityKind::CobbDouglas,
        }
        .sample(&mut rng)
        .expect("market");
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..4.0)).collect();
        let game = fisher_game(&m);
        let oracle = FisherDemandOracle::new(m.clone()).without_multipliers();
        let v = |q: &[f64]| value_function(&game, q, &oracle, &kkt).expect("oracle");
        let s = envelope_subgradient(&game, &p, &v(&p)).expect("subgradient");
        for j in 0..3 {
            let (mut up, mut down) = (p.clone(), p.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (v(&up).value - v(&down).value) / (2.0 * h);
            worst_fd = worst_fd.max((fd - s[j]).abs());
        }
    }
    outcome(
        worst_closed <= 1e-8 && worst_fd <= 1e-4,
        format!("closed-form error {worst_closed:.3e}, finite-difference error {worst_fd:.3e}"),
    )
}

fn fisher_runs(utility: UtilityKind) -> Vec<(FisherMarket, stackelberg::Trajectory)> {
    let cfg = ExperimentConfig::new(utility, 0);
    (0..cfg.n_markets)
        .map(|k| {
            let (market, p0) = cfg.instance(k).expect("instance");
            let run = tatonnement(&market, &preset_config(cfg.iters, 0, p0)).expect("run completes");
            (market, run)
        })
        .collect()
}

fn fisher_equilibrium() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for utility in [UtilityKind::Linear, UtilityKind::CobbDouglas] {
        let runs = fisher_runs(utility);
        let mut ok = 0;
        let mut worst: f64 = 0.0;
        for (m, t) in &runs {
            let rows = allocation_rows(&t.final_y, m.n_goods());
            let r = check_equilibrium(m, &t.final_x, &rows, 5e-2);
            let relative_gap_ok = r.max_buyer_gap <= 5e-2;
            if r.max_residual() <= 5e-2 && relative_gap_ok {
                ok += 1;
            }
            worst = worst.max(r.max_residual());
        }
        passed &= ok * 10 >= runs.len() * 9;
        parts.push(format!("{}: {ok}/{} cleared (worst residual {worst:.3})", utility.name(), runs.len()));
    }
    let leontief = fisher_runs(UtilityKind::Leontief);
    let stable = leontief.iter().all(|(_, t)| {
        let best = prefix_min(&t.objective);
        t.objective.iter().chain(&t.final_x).all(|v| v.is_finite()) && best.windows(2).all(|w| w[1] <= w[0])
    });
    passed &= stable;
    parts.push(format!("leontief: {} runs stable = {stable}", leontief.len()));
    outcome(passed, parts.join("; "))
}

/// Slope of the mean best-objective gap over markets, with `v*` per market
/// from an exact run ten times longer. Both families run for the linear
/// iteration count so the fit windows match.
fn rate_slope(utility: UtilityKind) -> f64 {
    let cfg = ExperimentConfig::new(UtilityKind::Linear, 0);
    let iters = cfg.iters;
    let cfg = ExperimentConfig { utility, ..cfg };
    let mut gaps = vec![0.0; iters];
    for k in 0..cfg.n_markets {
        let (market, p0) = cfg.instance(k).expect("instance");
        let run = tatonnement(&market, &preset_config(iters, 0, p0.clone())).expect("run completes");
        let reference = tatonnement(&market, &preset_config(10 * iters, 0, p0)).expect("reference completes");
        let best = prefix_min(&run.objective);
        let v_star = reference.best_objective().min(*best.last().expect("nonempty"));
        for (g, b) in gaps.iter_mut().zip(&best) {
            *g += (b - v_star) / cfg.n_markets as f64;
        }
    }
    fit_power_law(&gaps).slope
}

fn rate_property() -> Outcome {
    let linear = rate_slope(UtilityKind::Linear);
    let cobb_douglas = rate_slope(UtilityKind::CobbDouglas);
    outcome(
        linear <= -0.45 && cobb_douglas < linear,
        format!("linear slope {linear:.3}, cobb-douglas slope {cobb_douglas:.3}"),
    )
}

fn strongly_convex_bound() -> Outcome {
    let mu = 2.0;
    let mut worst_margin = f64::INFINITY;
    for iters in [10, 100, 1000] {
        for x0 in [-1.0, -0.3, 0.2, 1.0] {
            let cfg = SolverConfig::new(iters, StepSchedule::StronglyConvex { mu }).with_x0(vec![x0]);
            let traj = max_oracle_gd(&example1(), &Example1Oracle::default(), &cfg).expect("run completes");
            let bound = 2.0 * traj.max_subgradient_norm() / (mu * (iters as f64 + 1.0)) + 1e-9;
            worst_margin = worst_margin.min(bound - (traj.best_objective() - 0.75));
        }
    }
    outcome(worst_margin >= 0.0, format!("smallest slack under the bound {worst_margin:.3e}"))
}

fn random_market(rng: &mut ChaCha8Rng, utility: UtilityKind, n: usize, m: usize) -> FisherMarket {
    MarketSpec {
        n_buyers: n,
        n_goods: m,
        budget_range: (0.5, 10.0),
        valuation_range: (0.1, 5.0),
        utility,
    }
    .sample(rng)
    .expect("market")
}

fn multiplier_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_closed: f64 = 0.0;
    for kind in UtilityKind::ALL {
        for _ in 0..100 {
            let m = random_market(&mut rng, kind, 3, 4);
            let p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..5.0)).collect();
            for i in 0..3 {
                let d = demand(&m, i, &p).expect("demand");
                // stationarity b/u g = lambda p contracted with x: lambda = b (g.x) / (u p.x)
                let g = utility_subgradient(&m, i, &d.x).expect("subgradient");
                let u = utility(&m, i, &d.x).expect("utility");
                let gx: f64 = g.iter().zip(&d.x).map(|(a, b)| a * b).sum();
                let lambda = m.budget(i) * gx / (u * d.spent);
                worst_closed = worst_closed.max((lambda - 1.0).abs()).max((d.multiplier - 1.0).abs());
            }
        }
    }
    let mut worst_nnls: f64 = 0.0;
    for _ in 0..100 {
        let m = random_market(&mut rng, UtilityKind::CobbDouglas, 3, 4);
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..5.0)).collect();
        let game = fisher_game(&m);
        let oracle = FisherDemandOracle::new(m.clone()).without_multipliers();
        let sol = value_function(&game, &p, &oracle, &KktOptions::default()).expect("kkt recovery");
        for l in sol.multipliers.lambda() {
            worst_nnls = worst_nnls.max((l - 1.0).abs());
        }
    }
    outcome(
        worst_closed <= 1e-6 && worst_nnls <= 1e-4,
        format!("closed-form deviation {worst_closed:.3e}, least-squares deviation {worst_nnls:.3e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let points = 20_000;
    for kind in UtilityKind::ALL {
        for _ in 0..50 {
            let m = random_market(&mut rng, kind, 1, 2);
            let p: Vec<f64> = (0..2).map(|_| rng.gen_range(0.1..5.0)).collect();
            let exact = demand(&m, 0, &p).expect("demand").utility_value;
            let b = m.budget(0);
            let grid = (0..=points)
                .map(|k| {
                    let x0 = b / p[0] * k as f64 / points as f64;
                    let x1 = ((b - p[0] * x0) / p[1]).max(0.0);
                    utility(&m, 0, &[x0, x1]).expect("utility")
                })
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((exact - grid).abs() / exact.abs());
        }
    }
    outcome(worst <= 1e-3, format!("largest relative difference {worst:.3e}"))
}

fn determinism() -> Outcome {
    let base = ExperimentConfig {
        start_prices: StartPrices::High,
        ..ExperimentConfig::new(UtilityKind::CobbDouglas, 7)
    };
    let first = run_experiment(&ExperimentConfig {
        threads: Some(1),
        ..base.clone()
    })
    .and_then(|r| r.outputs())
    .expect("experiment");
    let second = run_experiment(&base).and_then(|r| r.outputs()).expect("experiment");
    let same = first == second;
    outcome(
        same,
        format!(
            "results {} bytes, mean trajectory {} bytes, svg {} bytes, identical = {same}",
            first.results_csv.len(),
            first.mean_trajectory_csv.len(),
            first.convergence_svg.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "toy Stackelberg optimum", limit: Duration::from_secs(1), run: toy_optimum },
        Criterion { name: "minimax gap", limit: Duration::from_secs(1), run: minimax_gap },
        Criterion { name: "envelope subgradients", limit: Duration::from_secs(5), run: envelope_check },
        Criterion { name: "Fisher equilibrium", limit: Duration::from_secs(120), run: fisher_equilibrium },
        Criterion { name: "convergence rate", limit: Duration::from_secs(180), run: rate_property },
        Criterion { name: "strongly convex bound", limit: Duration::from_secs(1), run: strongly_convex_bound },
        Criterion { name: "multiplier law", limit: Duration::from_secs(10), run: multiplier_law },
        Criterion { name: "oracle equivalence", limit: Duration::from_secs(30), run: oracle_equivalence },
        Criterion { name: "determinism", limit: Duration::MAX, run: determinism },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let out = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let passed = out.passed && in_time;
        if !passed {
            failures += 1;
        }
        let timing = if in_time { String::new() } else { format!(" [over time limit {:?}]", c.limit) };
        println!(
            "{} {}: {} ({:.2}s){}",
            if passed { "PASS" } else { "FAIL" },
            c.name,
            out.detail,
            elapsed.as_secs_f64(),
            timing
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
