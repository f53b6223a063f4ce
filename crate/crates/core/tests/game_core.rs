use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stackelberg::fixtures::{
    bilinear, danskin, danskin_derivative, danskin_value, example1, example1_value, DanskinOracle, Example1Oracle,
    GneFixture,
};
use stackelberg::game::{
    check_stackelberg, envelope_subgradient, feasible, kkt_multipliers, max_min_value, min_max_value, value_function,
    OuterReference,
};
use stackelberg::polynomial::PolynomialGame;
use stackelberg::{BoxSet, Constraint, Error, Game, GridOracle, InnerSolution, KktOptions, Multipliers, ProjectedAscentOracle};

fn kkt() -> KktOptions {
    KktOptions::default()
}

#[test]
fn feasibility_examples() {
    let g = example1();
    assert!(feasible(&g, &[0.5], &[-0.5], 0.0).unwrap());
    assert!(!feasible(&g, &[0.5], &[0.5], 0.0).unwrap());
    assert!(feasible(&bilinear(), &[0.3], &[-0.9], 0.0).unwrap());
    assert!(!feasible(&bilinear(), &[1.5], &[0.0], 0.0).unwrap());
}

#[test]
fn envelope_example_points() {
    let g = example1();
    let sol = InnerSolution {
        y_star: vec![-0.25],
        value: 0.0,
        multipliers: Multipliers::new(vec![1.0]).unwrap(),
        oracle_gap: 0.0,
    };
    assert_eq!(envelope_subgradient(&g, &[0.25], &sol).unwrap(), vec![-0.5]);

    // without constraints the subgradient is grad_x f
    let b = bilinear();
    let sol = InnerSolution {
        y_star: vec![0.7],
        value: 0.0,
        multipliers: Multipliers::zeros(0),
        oracle_gap: 0.0,
    };
    assert_eq!(envelope_subgradient(&b, &[0.2], &sol).unwrap(), vec![0.7]);

    // at x = -1 the inner optimum is y = 1 with lambda = 2y - 1 = 1
    let d = danskin();
    let sol = value_function(&d, &[-1.0], &DanskinOracle::default(), &kkt()).unwrap();
    assert!((sol.y_star[0] - 1.0).abs() < 1e-15);
    assert!((sol.multipliers.lambda()[0] - 1.0).abs() < 1e-12);
    let s = envelope_subgradient(&d, &[-1.0], &sol).unwrap();
    assert!((s[0] - 3.0).abs() < 1e-12);
}

#[test]
fn kkt_examples() {
    let g = example1();
    let l = kkt_multipliers(&g, &[0.25], &[-0.25], &kkt()).unwrap();
    assert!((l.lambda()[0] - 1.0).abs() < 1e-12);

    // g = 2 - x - y is slack at (x, y) = (-1, 1): the optimum sits on the box face
    let slack = Game::new(
        BoxSet::cube(1, -1.0, 1.0).unwrap(),
        BoxSet::cube(1, -1.0, 1.0).unwrap(),
        |x, y| x[0] * x[0] + y[0] + 1.0,
        |x, _| vec![2.0 * x[0]],
        |_, _| vec![1.0],
    )
    .with_constraint(Constraint::new(|x, y| 2.0 - x[0] - y[0], |_, _| vec![-1.0], |_, _| vec![-1.0]).affine_in_y());
    let l = kkt_multipliers(&slack, &[-1.0], &[1.0], &kkt()).unwrap();
    assert_eq!(l.lambda(), &[0.0]);
}

#[test]
fn non_stationary_point_is_reported() {
    // y = 0 is interior and feasible for x = -0.5 but grad_y f = 1 there
    let err = kkt_multipliers(&example1(), &[-0.5], &[0.0], &kkt()).unwrap_err();
    assert!(matches!(err, Error::NotStationary { .. }));
}

#[test]
fn value_function_examples() {
    let g = example1();
    let o = Example1Oracle::default();
    let v0 = value_function(&g, &[0.0], &o, &kkt()).unwrap();
    assert_eq!(v0.y_star, vec![0.0]);
    assert!((v0.value - 1.0).abs() < 1e-15);
    assert!((value_function(&g, &[0.5], &o, &kkt()).unwrap().value - 0.75).abs() < 1e-15);
    let d = value_function(&danskin(), &[-1.0], &DanskinOracle::default(), &kkt()).unwrap();
    assert!(d.value.abs() < 1e-15);
}

#[test]
fn value_function_rejects_bad_queries() {
    let g = example1();
    let bad_oracle = |_: &Game, _: &[f64]| {
        Ok(stackelberg::OracleResponse {
            y: vec![1.0],
            multipliers: None,
            gap: 0.0,
        })
    };
    assert!(matches!(
        value_function(&g, &[0.5], &bad_oracle, &kkt()),
        Err(Error::Infeasible(_))
    ));
    assert!(value_function(&g, &[2.0], &Example1Oracle::default(), &kkt()).is_err());
}

#[test]
fn envelope_matches_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let e1 = example1();
    let d = danskin();
    for _ in 0..500 {
        let x = rng.gen_range(-1.0..1.0);
        let sol = value_function(&e1, &[x], &Example1Oracle::default(), &kkt()).unwrap();
        let s = envelope_subgradient(&e1, &[x], &sol).unwrap()[0];
        assert!((s - (2.0 * x - 1.0)).abs() <= 1e-8, "example1 at {x}: {s}");
        assert!((sol.value - example1_value(x)).abs() <= 1e-12);

        let x: f64 = rng.gen_range(-2.0..2.0);
        if (x + 0.5).abs() < 1e-6 {
            continue;
        }
        let sol = value_function(&d, &[x], &DanskinOracle::default(), &kkt()).unwrap();
        let s = envelope_subgradient(&d, &[x], &sol).unwrap()[0];
        assert!((s - danskin_derivative(x)).abs() <= 1e-8, "danskin at {x}: {s}");
        assert!((sol.value - danskin_value(x)).abs() <= 1e-12);
    }
}

#[test]
fn envelope_matches_finite_differences_with_iterative_oracle() {
    let g = example1();
    let o = ProjectedAscentOracle::default();
    let h = stackelberg::game::FD_STEP;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let x = rng.gen_range(-0.9..0.9);
        let sol = value_function(&g, &[x], &o, &KktOptions::lenient()).unwrap();
        let s = envelope_subgradient(&g, &[x], &sol).unwrap()[0];
        let vp = value_function(&g, &[x + h], &o, &KktOptions::lenient()).unwrap().value;
        let vm = value_function(&g, &[x - h], &o, &KktOptions::lenient()).unwrap().value;
        let fd = (vp - vm) / (2.0 * h);
        assert!((s - fd).abs() <= 1e-4 * (1.0 + s.abs()), "x={x} env={s} fd={fd}");
    }
}

#[test]
fn complementary_slackness_holds() {
    let d = danskin();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let x = rng.gen_range(-2.0..2.0);
        let y = 0.5_f64.max(-x);
        let l = kkt_multipliers(&d, &[x], &[y], &kkt()).unwrap();
        let g = d.constraint_value(0, &[x], &[y]);
        let lam = l.lambda()[0];
        assert!(lam >= 0.0);
        assert!(lam * g.max(0.0) <= 1e-8 * (1.0 + lam.abs()));
    }
}

#[test]
fn subgradient_inequality_for_convex_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    // the Danskin fixture's value is concave left of its kink, so only
    // fixtures with convex values are checked
    let cases: [(Game, Box<dyn stackelberg::InnerOracle>, (f64, f64)); 2] = [
        (example1(), Box::new(Example1Oracle::default()), (-1.0, 1.0)),
        (danskin(), Box::new(DanskinOracle::default()), (-0.5, 2.0)),
    ];
    for (g, o, (lo, hi)) in &cases {
        for _ in 0..300 {
            let (a, b) = (rng.gen_range(*lo..*hi), rng.gen_range(*lo..*hi));
            let sa = value_function(g, &[a], o.as_ref(), &kkt()).unwrap();
            let sb = value_function(g, &[b], o.as_ref(), &kkt()).unwrap();
            let s = envelope_subgradient(g, &[a], &sa).unwrap()[0];
            assert!(sb.value >= sa.value + s * (b - a) - 1e-6);
        }
    }
}

#[test]
fn minimax_gap_on_example1() {
    let g = example1();
    let min_max = min_max_value(&g, 2001).unwrap();
    let max_min = max_min_value(&g, 2001).unwrap();
    assert!((min_max - 0.75).abs() <= 1e-3, "{min_max}");
    assert!((max_min - 3.0).abs() <= 1e-3, "{max_min}");
    let b = bilinear();
    assert!(min_max_value(&b, 201).unwrap().abs() < 1e-12);
    assert!(max_min_value(&b, 201).unwrap().abs() < 1e-12);
}

#[test]
fn min_max_rejects_large_games() {
    let g = Game::new(
        BoxSet::cube(3, 0.0, 1.0).unwrap(),
        BoxSet::cube(1, 0.0, 1.0).unwrap(),
        |_, y| y[0],
        |_, _| vec![0.0; 3],
        |_, _| vec![1.0],
    );
    assert!(matches!(max_min_value(&g, 5), Err(Error::Unsupported(_))));
}

#[test]
fn gne_values_sit_between_the_two_orders() {
    let fx = GneFixture::new();
    for (x, y) in fx.equilibria(21) {
        let v = fx.game.objective(&[x], &[y]).unwrap();
        assert!((1.0 - 1e-12..=3.0 + 1e-12).contains(&v));
        assert!(v > 0.75 && v <= 3.0);
    }
}

#[test]
fn stackelberg_check_examples() {
    let g = example1();
    let o = Example1Oracle::default();
    let grid = OuterReference::Grid { resolution: 2001 };
    let at_opt = check_stackelberg(&g, &[0.5], &[-0.5], 1e-6, 1e-6, &o, grid).unwrap();
    assert!(at_opt.is_equilibrium, "{at_opt:?}");
    let origin = check_stackelberg(&g, &[0.0], &[0.0], 0.1, 1e-6, &o, grid).unwrap();
    assert!(!origin.is_equilibrium);
    assert!((origin.outer_gap - 0.25).abs() < 1e-6);
    let vacuous = check_stackelberg(&g, &[-0.3], &[-0.9], f64::INFINITY, f64::INFINITY, &o, grid).unwrap();
    assert!(vacuous.is_equilibrium);
    // a GNE is not a Stackelberg equilibrium
    let gne = check_stackelberg(&g, &[-0.5], &[0.5], 1e-3, 1e-3, &o, OuterReference::Value(0.75)).unwrap();
    assert!(!gne.is_equilibrium);
    assert!(check_stackelberg(&g, &[0.5], &[0.5], 1.0, 1.0, &o, grid).is_err());
}

#[test]
fn grid_oracle_agrees_with_exact_oracle() {
    let g = example1();
    for k in 0..=20 {
        let x = -1.0 + 0.1 * k as f64;
        let exact = value_function(&g, &[x], &Example1Oracle::default(), &kkt()).unwrap().value;
        let grid = value_function(&g, &[x], &GridOracle { resolution: 2001 }, &KktOptions::lenient()).unwrap().value;
        assert!((exact - grid).abs() <= 1e-3);
    }
}

#[test]
fn polynomial_json_reproduces_example1() {
    let json = r#"{
        "outer_set": {"lower": [-1.0], "upper": [1.0]},
        "inner_set": {"lower": [-1.0], "upper": [1.0]},
        "objective": [
            {"coef": 1.0, "x": [2], "y": [0]},
            {"coef": 1.0, "x": [0], "y": [1]},
            {"coef": 1.0, "x": [0], "y": [0]}
        ],
        "constraints": [[
            {"coef": -1.0, "x": [1], "y": [0]},
            {"coef": -1.0, "x": [0], "y": [1]}
        ]]
    }"#;
    let game = PolynomialGame::from_json(json).unwrap().to_game();
    // interior points only: at x = +-1 a box face is active alongside the
    // constraint and the multipliers are not unique
    for k in 1..10 {
        let x = -1.0 + 0.2 * k as f64;
        let sol = value_function(&game, &[x], &Example1Oracle::default(), &kkt()).unwrap();
        assert!((sol.value - example1_value(x)).abs() < 1e-12);
        let s = envelope_subgradient(&game, &[x], &sol).unwrap()[0];
        assert!((s - (2.0 * x - 1.0)).abs() < 1e-9);
    }
}
