use super::{check_divergence, SolverConfig, SolverFailure, SolverResult, Trajectory};
use super::{project_inner_feasible, PROJECTION_SWEEPS, PROJECTION_TOL};
use crate::error::{Error, Result};
use crate::game::{envelope_subgradient, kkt_multipliers, Game, InnerSolution, KktOptions};
use crate::linalg::norm2;
use crate::solvers::StepSchedule;

/// Projected gradient ascent on `f(x, .)` over `{y in Y : g(x, y) >= 0}`
/// starting from `y0`.
///
/// A step is accepted when
/// `f(y+) >= f(y) + <grad, y+ - y> - |y+ - y|^2 / (2 eta)`; otherwise it is
/// retried at half the size and the reduced size is kept for the remaining
/// iterations, which plays the role of a `1/L` step without knowing `L`. With `iters == 0`, `y0` is returned
/// unchanged.
pub fn inner_ascent(game: &Game, x: &[f64], y0: &[f64], iters: usize, schedule: &StepSchedule) -> Result<Vec<f64>> {
    let mut y = y0.to_vec();
    if iters == 0 {
        return Ok(y);
    }
    let mut value = game.objective(x, &y)?;
    let mut shrink = 1.0;
    for s in 1..=iters {
        let grad = game.grad_y_objective(x, &y)?;
        let mut attempts = 0;
        loop {
            let eta = schedule.step(s) * shrink;
            let trial: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a + eta * g).collect();
            let cand = project_inner_feasible(&trial, x, game, PROJECTION_SWEEPS, PROJECTION_TOL)?;
            let v = game.objective(x, &cand)?;
            if sufficient_ascent(value, v, &y, &cand, &grad, eta) || attempts >= 60 {
                y = cand;
                value = v;
                break;
            }
            shrink *= 0.5;
            attempts += 1;
        }
    }
    Ok(y)
}

pub(crate) fn sufficient_ascent(value: f64, next: f64, y: &[f64], cand: &[f64], grad: &[f64], eta: f64) -> bool {
    let mut lin = 0.0;
    let mut sq = 0.0;
    for ((a, b), g) in y.iter().zip(cand).zip(grad) {
        lin += g * (b - a);
        sq += (b - a) * (b - a);
    }
    let slack = 1e-12 * (1.0 + value.abs());
    next >= value + lin - sq / (2.0 * eta) - slack
}

/// Nested gradient descent-ascent: an inner projected-ascent loop restarted
/// from `y0` at every outer iterate, followed by an envelope-subgradient
/// step for the outer player. A final inner loop refines `y` at `x^T`.
pub fn nested_gda(game: &Game, config: &SolverConfig) -> SolverResult {
    let mut traj = Trajectory::with_capacity(config.outer_iters);
    let fail = |t: usize, e: Error, traj: Trajectory| SolverFailure::new(t, e, traj);
    if let Err(e) = config.validate() {
        return Err(fail(0, e, traj));
    }
    let (mut x, y0) = match config
        .initial_outer(game.outer_set())
        .and_then(|x| Ok((x, config.initial_inner(game.inner_set())?)))
    {
        Ok(v) => v,
        Err(e) => return Err(fail(0, e, traj)),
    };
    // inexact inner points rarely satisfy stationarity exactly
    let kkt = KktOptions {
        residual_tol: f64::INFINITY,
        ..config.kkt
    };

    for t in 1..=config.outer_iters {
        let step = config.outer_schedule.step(t);
        let outcome = (|| -> Result<(InnerSolution, Vec<f64>)> {
            let y = inner_ascent(game, &x, &y0, config.inner_iters, &config.inner_schedule)?;
            let multipliers = kkt_multipliers(game, &x, &y, &kkt)?;
            let value = game.objective(&x, &y)?;
            let sol = InnerSolution {
                y_star: y,
                value,
                multipliers,
                oracle_gap: f64::NAN,
            };
            let sub = envelope_subgradient(game, &x, &sol)?;
            Ok((sol, sub))
        })();
        let (sol, sub) = match outcome {
            Ok(v) => v,
            Err(e) => return Err(fail(t, e, traj)),
        };
        let moved: Vec<f64> = x.iter().zip(&sub).map(|(xi, gi)| xi - step * gi).collect();
        let next = game.outer_set().project(&moved);
        traj.push(x, sol.y_star, sol.value, step, norm2(&sub));
        if let Err(e) = check_divergence(&next, game.outer_set(), t) {
            return Err(fail(t, e, traj));
        }
        x = next;
    }

    let last = inner_ascent(game, &x, &y0, config.inner_iters, &config.inner_schedule)
        .and_then(|y| Ok((game.objective(&x, &y)?, y)));
    match last {
        Ok((value, y)) => {
            traj.final_objective = value;
            traj.final_y = y;
            traj.final_x = x;
            Ok(traj)
        }
        Err(e) => Err(fail(config.outer_iters + 1, e, traj)),
    }
}
