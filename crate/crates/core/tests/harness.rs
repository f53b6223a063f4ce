use stackelberg::fisher::{tatonnement, UtilityKind};
use stackelberg::harness::*;
use stackelberg::SolverConfig;

fn small(utility: UtilityKind, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n_markets: 4,
        iters: 60,
        inner_iters: 10,
        ..ExperimentConfig::new(utility, seed)
    }
}

#[test]
fn cobb_douglas_batch_runs_clean() {
    let cfg = ExperimentConfig::new(UtilityKind::CobbDouglas, 7);
    assert_eq!((cfg.n_markets, cfg.n_buyers, cfg.n_goods, cfg.iters), (20, 5, 8, 300));
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.failures, 0);
    assert_eq!(res.mean_objective_mogd.len(), 300);
    assert!(res.mean_objective_mogd.iter().chain(&res.mean_objective_ngd).all(|v| v.is_finite()));
    let summary = res.compare().unwrap();
    assert_eq!(summary.n, 20);
    for v in [summary.mean_a, summary.mean_b, summary.stdev_a, summary.ci_low, summary.ci_high] {
        assert!(v.is_finite());
    }
    let csv = res.results_csv().unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 20);
}

#[test]
fn single_market_mean_is_that_run() {
    let cfg = ExperimentConfig {
        n_markets: 1,
        ..small(UtilityKind::Linear, 3)
    };
    let res = run_experiment(&cfg).unwrap();
    let (market, p0) = cfg.instance(0).unwrap();
    let solver = SolverConfig::new(cfg.iters, cfg.outer_schedule.clone()).with_x0(p0);
    let traj = tatonnement(&market, &solver).unwrap();
    assert_eq!(res.mean_objective_mogd, traj.objective);
}

#[test]
fn exports_are_deterministic_across_worker_counts() {
    let base = small(UtilityKind::Leontief, 11);
    let serial = run_experiment(&ExperimentConfig {
        threads: Some(1),
        ..base.clone()
    })
    .unwrap();
    let parallel = run_experiment(&ExperimentConfig {
        threads: Some(4),
        ..base.clone()
    })
    .unwrap();
    let again = run_experiment(&base).unwrap();
    for r in [&parallel, &again] {
        assert_eq!(serial.results_csv().unwrap(), r.results_csv().unwrap());
        assert_eq!(serial.mean_trajectory_csv().unwrap(), r.mean_trajectory_csv().unwrap());
    }
}

#[test]
fn csv_headers() {
    let res = run_experiment(&small(UtilityKind::CobbDouglas, 1)).unwrap();
    let results = res.results_csv().unwrap();
    assert!(results.starts_with("seed,algo,final_objective,clearing_residual,buyer_gap,runtime_ms\n"));
    assert!(results.lines().nth(1).unwrap().starts_with("0,mogd,"));
    let mean = res.mean_trajectory_csv().unwrap();
    assert!(mean.starts_with("iter,mean_objective_mogd,mean_objective_ngd\n"));
    assert_eq!(mean.lines().count(), 61);
}

#[test]
fn reference_runs_enable_rate_fits() {
    let cfg = ExperimentConfig {
        reference_factor: Some(5),
        ..small(UtilityKind::CobbDouglas, 2)
    };
    let res = run_experiment(&cfg).unwrap();
    assert!(res.markets.iter().all(|m| m.v_star.is_some()));
    let gap = res.mean_gap(ALGO_MOGD).unwrap();
    assert!(gap.iter().all(|g| *g >= 0.0));
    assert!(res.rates().is_ok());
    assert!(run_experiment(&small(UtilityKind::CobbDouglas, 2)).unwrap().rates().is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        ExperimentConfig {
            n_markets: 0,
            ..small(UtilityKind::Linear, 0)
        },
        ExperimentConfig {
            iters: 0,
            ..small(UtilityKind::Linear, 0)
        },
        ExperimentConfig {
            threads: Some(0),
            ..small(UtilityKind::Linear, 0)
        },
    ] {
        assert!(run_experiment(&cfg).is_err());
    }
}

#[test]
fn default_iterations_per_family() {
    assert_eq!(default_iters(UtilityKind::Linear), 500);
    assert_eq!(default_iters(UtilityKind::CobbDouglas), 300);
    assert_eq!(default_iters(UtilityKind::Leontief), 700);
    assert_eq!("low".parse::<StartPrices>().unwrap(), StartPrices::Low);
    assert!("medium".parse::<StartPrices>().is_err());
}
