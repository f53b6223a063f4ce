use proptest::prelude::*;
use stackelberg::fisher::{demand, FisherMarket, UtilityKind};
use stackelberg::fixtures::{example1, Example1Oracle};
use stackelberg::solvers::{max_oracle_gd, project_box, project_budget_set};
use stackelberg::{BoxSet, SolverConfig, StepSchedule};

fn kind() -> impl Strategy<Value = UtilityKind> {
    prop_oneof![
        Just(UtilityKind::Linear),
        Just(UtilityKind::CobbDouglas),
        Just(UtilityKind::Leontief)
    ]
}

proptest! {
    #[test]
    fn box_projection_is_nearest_point(p in prop::collection::vec(-5.0..5.0f64, 3), q in prop::collection::vec(-1.0..1.0f64, 3)) {
        let b = BoxSet::cube(3, -1.0, 1.0).unwrap();
        let x = project_box(&p, &b).unwrap();
        prop_assert!(b.contains(&x, 0.0));
        let d = |w: &[f64]| w.iter().zip(&p).map(|(a, c)| (a - c) * (a - c)).sum::<f64>();
        prop_assert!(d(&x) <= d(&q) + 1e-12);
    }

    #[test]
    fn budget_projection_is_feasible_and_idempotent(
        z in prop::collection::vec(-3.0..6.0f64, 4),
        p in prop::collection::vec(0.05..4.0f64, 4),
        b in 0.1..10.0f64,
    ) {
        let x = project_budget_set(&z, &p, b).unwrap();
        prop_assert!(x.iter().all(|v| *v >= 0.0));
        let spent: f64 = x.iter().zip(&p).map(|(a, c)| a * c).sum();
        prop_assert!(spent <= b * (1.0 + 1e-12) + 1e-15);
        let again = project_budget_set(&x, &p, b).unwrap();
        for (a, c) in again.iter().zip(&x) {
            prop_assert!((a - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn demand_is_feasible_and_exhausts_budget(
        kind in kind(),
        b in 0.1..100.0f64,
        v in prop::collection::vec(0.0..10.0f64, 3),
        p in prop::collection::vec(0.01..50.0f64, 3),
    ) {
        prop_assume!(v.iter().any(|x| *x > 1e-6));
        let m = FisherMarket::new(vec![b], vec![v], kind).unwrap();
        let d = demand(&m, 0, &p).unwrap();
        prop_assert!(d.x.iter().all(|x| *x >= 0.0));
        prop_assert!((d.spent - b).abs() <= 1e-12 * b);
        prop_assert_eq!(d.multiplier, 1.0);
    }

    #[test]
    fn solver_iterates_stay_feasible_and_best_is_monotone(
        x0 in -1.0..1.0f64,
        base in 0.01..3.0f64,
        iters in 1usize..200,
    ) {
        let cfg = SolverConfig::new(iters, StepSchedule::sqrt_decay(base).unwrap()).with_x0(vec![x0]);
        let traj = max_oracle_gd(&example1(), &Example1Oracle::default(), &cfg).unwrap();
        prop_assert_eq!(traj.len(), iters);
        prop_assert!(traj.iterates_x.iter().all(|x| (-1.0..=1.0).contains(&x[0])));
        let best = traj.best_so_far();
        prop_assert!(best.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(traj.best_objective(), *best.last().unwrap());
        let first = traj.objective.iter().position(|v| *v == traj.best_objective()).unwrap();
        prop_assert_eq!(traj.best_index, first);
    }
}
