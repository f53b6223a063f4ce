use super::{check_divergence, SolverConfig, SolverFailure, SolverResult, Trajectory};
use crate::error::{Error, Result};
use crate::game::{envelope_subgradient, value_function, Game, InnerSolution};
use crate::linalg::norm2;
use crate::oracle::InnerOracle;

/// Max-oracle gradient descent.
///
/// At each outer iterate the oracle supplies a `delta`-best response and its
/// multipliers; the outer player then takes a projected step along the
/// envelope subgradient `grad_x f + sum_k lambda_k grad_x g_k`.
pub fn max_oracle_gd(game: &Game, oracle: &dyn InnerOracle, config: &SolverConfig) -> SolverResult {
    let mut traj = Trajectory::with_capacity(config.outer_iters);
    let fail = |t: usize, e: Error, traj: Trajectory| SolverFailure::new(t, e, traj);

    if let Err(e) = config.validate() {
        return Err(fail(0, e, traj));
    }
    let mut x = match config.initial_outer(game.outer_set()) {
        Ok(x) => x,
        Err(e) => return Err(fail(0, e, traj)),
    };

    for t in 1..=config.outer_iters {
        let step = config.outer_schedule.step(t);
        let sol = match respond(game, &x, oracle, config) {
            Ok(s) => s,
            Err(e) => return Err(fail(t, e, traj)),
        };
        let sub = match envelope_subgradient(game, &x, &sol) {
            Ok(s) => s,
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

    match respond(game, &x, oracle, config) {
        Ok(sol) => {
            traj.final_objective = sol.value;
            traj.final_y = sol.y_star;
            traj.final_x = x;
            Ok(traj)
        }
        Err(e) => Err(fail(config.outer_iters + 1, e, traj)),
    }
}

fn respond(game: &Game, x: &[f64], oracle: &dyn InnerOracle, config: &SolverConfig) -> Result<InnerSolution> {
    let sol = value_function(game, x, oracle, &config.kkt)?;
    if sol.oracle_gap > config.delta {
        return Err(Error::InvalidArgument(format!(
            "oracle gap {} exceeds the configured delta {}",
            sol.oracle_gap, config.delta
        )));
    }
    Ok(sol)
}
