//! Browser demo. Each operation takes plain numbers or strings and returns a
//! JSON document for the page to draw; the `wasm32` build wraps them with
//! `wasm-bindgen`.

use serde::Serialize;
use stackelberg::fisher::{
    allocation_rows, check_equilibrium, nested_tatonnement, tatonnement, EquilibriumReport, UtilityKind,
};
use stackelberg::fixtures::{by_name, example1, Example1Oracle};
use stackelberg::game::{envelope_subgradient, value_function};
use stackelberg::harness::{ExperimentConfig, StartPrices};
use stackelberg::solvers::max_oracle_gd;
use stackelberg::{Error, KktOptions, Result, SolverConfig, StepSchedule};

const MAX_TOY_ITERS: usize = 100_000;
const MAX_MARKET_ITERS: usize = 5_000;
const MAX_POINTS: usize = 2_001;

#[derive(Debug, Serialize)]
struct ToyRun {
    x: Vec<f64>,
    objective: Vec<f64>,
    best_objective: Vec<f64>,
    final_x: f64,
    final_objective: f64,
}

/// Max-oracle gradient descent on the toy game `x^2 + y + 1` with `x + y <= 0`.
///
/// `decay` is `const`, `sqrt` or `strong` (the last uses modulus 2 and ignores `eta`).
pub fn toy_trajectory(eta: f64, decay: &str, iters: usize, x0: f64) -> Result<String> {
    if iters == 0 || iters > MAX_TOY_ITERS {
        return Err(Error::InvalidArgument(format!(
            "iterations must be in 1..={MAX_TOY_ITERS}"
        )));
    }
    let schedule = match decay {
        "const" => StepSchedule::constant(eta)?,
        "sqrt" => StepSchedule::sqrt_decay(eta)?,
        "strong" => StepSchedule::strongly_convex(2.0)?,
        other => return Err(Error::InvalidArgument(format!("unknown decay `{other}`"))),
    };
    let config = SolverConfig::new(iters, schedule).with_x0(vec![x0]);
    let traj = max_oracle_gd(&example1(), &Example1Oracle::default(), &config).map_err(|f| f.source)?;
    let run = ToyRun {
        x: traj.iterates_x.iter().map(|x| x[0]).collect(),
        best_objective: traj.best_so_far(),
        objective: traj.objective,
        final_x: traj.final_x[0],
        final_objective: traj.final_objective,
    };
    Ok(serde_json::to_string(&run)?)
}

#[derive(Debug, Serialize)]
struct Curves {
    x: Vec<f64>,
    value: Vec<f64>,
    /// Envelope subgradient of the value function.
    envelope: Vec<f64>,
    /// `df/dx` at the best response, which ignores the moving constraint.
    partial: Vec<f64>,
    response: Vec<f64>,
}

/// Value function of a fixture game over its outer interval, with the
/// envelope subgradient and the naive partial derivative side by side.
pub fn value_curves(fixture: &str, points: usize) -> Result<String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(Error::InvalidArgument(format!("points must be in 2..={MAX_POINTS}")));
    }
    let (game, oracle) =
        by_name(fixture).ok_or_else(|| Error::InvalidArgument(format!("unknown fixture `{fixture}`")))?;
    let mut curves = Curves {
        x: game.outer_set().axis_grid(0, points),
        value: Vec::with_capacity(points),
        envelope: Vec::with_capacity(points),
        partial: Vec::with_capacity(points),
        response: Vec::with_capacity(points),
    };
    let kkt = KktOptions::lenient();
    for &x in &curves.x {
        let sol = value_function(&game, &[x], oracle.as_ref(), &kkt)?;
        curves.envelope.push(envelope_subgradient(&game, &[x], &sol)?[0]);
        curves.partial.push(game.grad_x_objective(&[x], &sol.y_star)?[0]);
        curves.response.push(sol.y_star[0]);
        curves.value.push(sol.value);
    }
    Ok(serde_json::to_string(&curves)?)
}

#[derive(Debug, Serialize)]
struct MarketRun {
    budgets: Vec<f64>,
    prices: Vec<Vec<f64>>,
    objective: Vec<f64>,
    objective_nested: Vec<f64>,
    excess_norm: Vec<f64>,
    final_prices: Vec<f64>,
    report: EquilibriumReport,
}

/// Tatonnement and nested tatonnement on one random market from the same
/// high starting prices.
pub fn tatonnement_demo(utility: &str, buyers: usize, goods: usize, seed: u64, iters: usize) -> Result<String> {
    if iters > MAX_MARKET_ITERS {
        return Err(Error::InvalidArgument(format!(
            "iterations must be at most {MAX_MARKET_ITERS}"
        )));
    }
    let utility: UtilityKind = utility.parse()?;
    let config = ExperimentConfig {
        n_markets: 1,
        n_buyers: buyers,
        n_goods: goods,
        iters,
        start_prices: StartPrices::High,
        ..ExperimentConfig::new(utility, seed)
    };
    config.validate()?;
    let (market, p0) = config.instance(0)?;
    let solver = stackelberg::fisher::preset_config(iters, config.inner_iters, p0);
    let exact = tatonnement(&market, &solver).map_err(|f| f.source)?;
    let nested = nested_tatonnement(&market, &solver).map_err(|f| f.source)?;
    let report = check_equilibrium(
        &market,
        &exact.final_x,
        &allocation_rows(&exact.final_y, market.n_goods()),
        5e-2,
    );
    let run = MarketRun {
        budgets: market.budgets().to_vec(),
        prices: exact.iterates_x.clone(),
        objective: exact.objective.clone(),
        objective_nested: nested.objective,
        excess_norm: exact.subgradient_norm.clone(),
        final_prices: exact.final_x,
        report,
    };
    Ok(serde_json::to_string(&run)?)
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn js(e: stackelberg::Error) -> JsError {
        JsError::new(&e.to_string())
    }

    #[wasm_bindgen(js_name = toyTrajectory)]
    pub fn toy_trajectory(eta: f64, decay: &str, iters: u32, x0: f64) -> Result<String, JsError> {
        super::toy_trajectory(eta, decay, iters as usize, x0).map_err(js)
    }

    #[wasm_bindgen(js_name = valueCurves)]
    pub fn value_curves(fixture: &str, points: u32) -> Result<String, JsError> {
        super::value_curves(fixture, points as usize).map_err(js)
    }

    #[wasm_bindgen(js_name = tatonnementDemo)]
    pub fn tatonnement_demo(utility: &str, buyers: u32, goods: u32, seed: u32, iters: u32) -> Result<String, JsError> {
        super::tatonnement_demo(utility, buyers as usize, goods as usize, seed as u64, iters as usize).map_err(js)
    }
}
