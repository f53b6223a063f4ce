//! Small games with known closed-form solutions, and exact oracles for them.

use crate::error::{Error, Result};
use crate::game::{BoxSet, Constraint, Game};
use crate::oracle::{InnerOracle, OracleResponse};

/// `min_{x in [-1,1]} max_{y in [-1,1] : x + y <= 0} x^2 + y + 1`.
///
/// `V(x) = x^2 - x + 1`, minimized at `x = 1/2` with value `3/4`; with the
/// order of play reversed the value is `3` at `(x, y) = (-1, 1)`.
pub fn example1() -> Game {
    let unit = BoxSet::cube(1, -1.0, 1.0).expect("valid box");
    Game::new(
        unit.clone(),
        unit,
        |x, y| x[0] * x[0] + y[0] + 1.0,
        |x, _| vec![2.0 * x[0]],
        |_, _| vec![1.0],
    )
    .with_constraint(
        Constraint::new(|x, y| -(x[0] + y[0]), |_, _| vec![-1.0], |_, _| vec![-1.0]).affine_in_y(),
    )
}

/// Exact best response for [`example1`]: `y* = -x`, always on the constraint.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1Oracle {
    /// Report `lambda = 1` directly instead of leaving it to KKT recovery.
    pub supply_multipliers: bool,
}

impl InnerOracle for Example1Oracle {
    fn respond(&self, _game: &Game, x: &[f64]) -> Result<OracleResponse> {
        let y = (-x[0]).min(1.0);
        Ok(OracleResponse {
            y: vec![y],
            multipliers: self.supply_multipliers.then(|| vec![1.0]),
            gap: 0.0,
        })
    }
}

/// `V(x)` of [`example1`].
pub fn example1_value(x: f64) -> f64 {
    x * x - x + 1.0
}

/// `max_{y : y + x >= 0} -y^2 + y + 2x + 2` over `x in [-2, 2]`,
/// `y in [-3, 3]`.
///
/// The value function has a kink at `x = -1/2`: `V'(x) = 2` to the right and
/// `1 - 2x` to the left, while the objective's own partial derivative is `2`
/// everywhere.
pub fn danskin() -> Game {
    Game::new(
        BoxSet::cube(1, -2.0, 2.0).expect("valid box"),
        BoxSet::cube(1, -3.0, 3.0).expect("valid box"),
        |x, y| -y[0] * y[0] + y[0] + 2.0 * x[0] + 2.0,
        |_, _| vec![2.0],
        |_, y| vec![1.0 - 2.0 * y[0]],
    )
    .with_constraint(Constraint::new(|x, y| y[0] + x[0], |_, _| vec![1.0], |_, _| vec![1.0]).affine_in_y())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DanskinOracle {
    pub supply_multipliers: bool,
}

impl InnerOracle for DanskinOracle {
    fn respond(&self, _game: &Game, x: &[f64]) -> Result<OracleResponse> {
        let y = 0.5_f64.max(-x[0]);
        Ok(OracleResponse {
            y: vec![y],
            multipliers: self.supply_multipliers.then(|| vec![2.0 * y - 1.0]),
            gap: 0.0,
        })
    }
}

pub fn danskin_value(x: f64) -> f64 {
    if x >= -0.5 {
        2.25 + 2.0 * x
    } else {
        -x * x + x + 2.0
    }
}

pub fn danskin_derivative(x: f64) -> f64 {
    if x >= -0.5 {
        2.0
    } else {
        1.0 - 2.0 * x
    }
}

/// `min_{x in [-1,1]} max_{y in [-1,1]} x y`, a game whose minimax theorem
/// holds with value 0.
pub fn bilinear() -> Game {
    let unit = BoxSet::cube(1, -1.0, 1.0).expect("valid box");
    Game::new(unit.clone(), unit, |x, y| x[0] * y[0], |_, y| vec![y[0]], |x, _| vec![x[0]])
}

/// `x^2 + y + 1 - y^2` on `[-1, 1]^2` without constraints; `y* = 1/2`.
pub fn strongly_concave_inner() -> Game {
    let unit = BoxSet::cube(1, -1.0, 1.0).expect("valid box");
    Game::new(
        unit.clone(),
        unit,
        |x, y| x[0] * x[0] + y[0] + 1.0 - y[0] * y[0],
        |x, _| vec![2.0 * x[0]],
        |_, y| vec![1.0 - 2.0 * y[0]],
    )
}

/// The pseudo-game view of [`example1`]: both players choose simultaneously
/// subject to the shared constraint `x + y <= 0`.
///
/// Its generalized Nash equilibria are `(x, -x)` for `x in [-1, 0]`, with
/// values `x^2 - x + 1 in [1, 3]`, between the min-max value `3/4` and the
/// max-min value `3`.
#[derive(Debug, Clone)]
pub struct GneFixture {
    pub game: Game,
}

impl GneFixture {
    pub fn new() -> Self {
        GneFixture { game: example1() }
    }

    /// `count` evenly spaced equilibria `(x, -x)`, `x in [-1, 0]`.
    pub fn equilibria(&self, count: usize) -> Vec<(f64, f64)> {
        let count = count.max(2);
        (0..count)
            .map(|k| {
                let x = -1.0 + k as f64 / (count - 1) as f64;
                (x, -x)
            })
            .collect()
    }

    /// Largest unilateral improvement available to either player at `(x, y)`
    /// within the shared constraint, measured on a grid of `resolution`
    /// points per axis. Zero (up to grid error) at a GNE.
    pub fn best_response_gap(&self, x: f64, y: f64, resolution: usize) -> Result<f64> {
        let g = &self.game;
        let here = g.objective(&[x], &[y])?;
        if -(x + y) < -1e-12 {
            return Err(Error::Infeasible("(x, y) violates x + y <= 0".into()));
        }
        let mut outer_gain = 0.0_f64;
        for xs in g.outer_set().axis_grid(0, resolution) {
            if xs + y <= 1e-12 {
                outer_gain = outer_gain.max(here - g.objective(&[xs], &[y])?);
            }
        }
        let mut inner_gain = 0.0_f64;
        for ys in g.inner_set().axis_grid(0, resolution) {
            if x + ys <= 1e-12 {
                inner_gain = inner_gain.max(g.objective(&[x], &[ys])? - here);
            }
        }
        Ok(outer_gain.max(inner_gain))
    }
}

impl Default for GneFixture {
    fn default() -> Self {
        Self::new()
    }
}

/// Compiled-in fixture names accepted by [`by_name`].
pub const FIXTURE_NAMES: [&str; 3] = ["example1", "danskin", "gne"];

/// A fixture game together with its exact oracle.
pub fn by_name(name: &str) -> Option<(Game, Box<dyn InnerOracle>)> {
    match name {
        "example1" | "gne" => Some((example1(), Box::new(Example1Oracle::default()))),
        "danskin" => Some((danskin(), Box::new(DanskinOracle::default()))),
        _ => None,
    }
}
