//! Inner-player oracles: given an outer point `x`, return a (near) best
//! response `y` from the constrained inner set.

use crate::error::{Error, Result};
use crate::game::{Game, FEAS_TOL};
use crate::solvers::projection::project_inner_feasible;

/// What an oracle returns at a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResponse {
    pub y: Vec<f64>,
    /// KKT multipliers, when the oracle knows them. Otherwise the caller
    /// recovers them with [`crate::game::kkt_multipliers`].
    pub multipliers: Option<Vec<f64>>,
    /// `delta` such that `f(x, y) >= V(x) - delta`.
    pub gap: f64,
}

/// A `delta`-maximizer of `f(x, .)` over `{y in Y : g(x, y) >= 0}`.
///
/// Implementations must be deterministic and reentrant.
pub trait InnerOracle: Send + Sync {
    fn respond(&self, game: &Game, x: &[f64]) -> Result<OracleResponse>;
}

impl<F> InnerOracle for F
where
    F: Fn(&Game, &[f64]) -> Result<OracleResponse> + Send + Sync,
{
    fn respond(&self, game: &Game, x: &[f64]) -> Result<OracleResponse> {
        self(game, x)
    }
}

/// Brute-force maximization over a grid of the inner box (inner dim <= 2).
///
/// Carries no accuracy guarantee (`gap` is infinite); useful as an
/// independent reference for values, not for multipliers.
#[derive(Debug, Clone, Copy)]
pub struct GridOracle {
    pub resolution: usize,
}

impl InnerOracle for GridOracle {
    fn respond(&self, game: &Game, x: &[f64]) -> Result<OracleResponse> {
        if game.dim_inner() > 2 {
            return Err(Error::Unsupported("grid oracle needs inner dimension <= 2".into()));
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for y in game.inner_set().grid(self.resolution) {
            if game.constraint_values(x, &y)?.iter().any(|g| *g < -FEAS_TOL) {
                continue;
            }
            let v = game.objective(x, &y)?;
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, y));
            }
        }
        let (_, y) = best.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
        Ok(OracleResponse {
            y,
            multipliers: None,
            gap: f64::INFINITY,
        })
    }
}

/// Projected gradient ascent on `f(x, .)` over the constrained inner set,
/// with step halving whenever a step fails to increase the objective.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedAscentOracle {
    pub iterations: usize,
    pub initial_step: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for ProjectedAscentOracle {
    fn default() -> Self {
        ProjectedAscentOracle {
            iterations: 2000,
            initial_step: 1.0,
            max_sweeps: 10_000,
            tol: 1e-12,
        }
    }
}

impl InnerOracle for ProjectedAscentOracle {
    fn respond(&self, game: &Game, x: &[f64]) -> Result<OracleResponse> {
        let start = game.inner_set().center();
        let mut y = project_inner_feasible(&start, x, game, self.max_sweeps, self.tol)?;
        let mut value = game.objective(x, &y)?;
        let mut step = self.initial_step;
        let mut last_gain = f64::INFINITY;
        for _ in 0..self.iterations {
            let grad = game.grad_y_objective(x, &y)?;
            let mut accepted = false;
            while step > 1e-14 {
                let trial: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
                let cand = project_inner_feasible(&trial, x, game, self.max_sweeps, self.tol)?;
                let v = game.objective(x, &cand)?;
                if v >= value {
                    last_gain = v - value;
                    y = cand;
                    value = v;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || last_gain == 0.0 {
                last_gain = 0.0;
                break;
            }
        }
        Ok(OracleResponse {
            y,
            multipliers: None,
            gap: last_gain,
        })
    }
}
