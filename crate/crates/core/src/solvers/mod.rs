//! First-order solvers for min-max Stackelberg games.

pub mod mogd;
pub mod nested;
pub mod projection;
pub mod rate;
pub mod schedule;
pub mod trajectory;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::game::{BoxSet, KktOptions};

pub use mogd::max_oracle_gd;
pub use nested::{inner_ascent, nested_gda};
pub use projection::{project_box, project_budget_set, project_inner_feasible};
pub use rate::{fit_power_law, fit_rate, RateFit};
pub use schedule::StepSchedule;
pub use trajectory::Trajectory;

/// Sweep budget and tolerance used for projections inside solver loops.
pub const PROJECTION_SWEEPS: usize = 10_000;
pub const PROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub outer_iters: usize,
    /// Inner ascent steps per outer iteration (nested solvers only).
    pub inner_iters: usize,
    pub outer_schedule: StepSchedule,
    pub inner_schedule: StepSchedule,
    /// Largest oracle gap accepted; infinite disables the check.
    pub delta: f64,
    /// Seeds the initial point when `x0` / `y0` are not given.
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    #[serde(skip)]
    pub kkt: KktOptions,
}

impl SolverConfig {
    pub fn new(outer_iters: usize, outer_schedule: StepSchedule) -> Self {
        SolverConfig {
            outer_iters,
            inner_iters: 100,
            outer_schedule,
            inner_schedule: StepSchedule::Constant { base: 1.0 },
            delta: f64::INFINITY,
            seed: 0,
            x0: None,
            y0: None,
            kkt: KktOptions::default(),
        }
    }

    pub fn with_inner(mut self, inner_iters: usize, inner_schedule: StepSchedule) -> Self {
        self.inner_iters = inner_iters;
        self.inner_schedule = inner_schedule;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_y0(mut self, y0: Vec<f64>) -> Self {
        self.y0 = Some(y0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_iters == 0 {
            return Err(Error::InvalidArgument("outer iterations must be >= 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidArgument("delta must be >= 0".into()));
        }
        self.outer_schedule.validate(self.outer_iters)?;
        self.inner_schedule.validate(self.inner_iters)
    }

    /// `x0`, or a uniform draw from `bounds` seeded by `seed` (stream 0).
    pub(crate) fn initial_outer(&self, bounds: &BoxSet) -> Result<Vec<f64>> {
        initial_point(self.x0.as_deref(), bounds, self.seed, 0, "x0")
    }

    /// `y0`, or a uniform draw from `bounds` seeded by `seed` (stream 1).
    pub(crate) fn initial_inner(&self, bounds: &BoxSet) -> Result<Vec<f64>> {
        initial_point(self.y0.as_deref(), bounds, self.seed, 1, "y0")
    }
}

fn initial_point(given: Option<&[f64]>, bounds: &BoxSet, seed: u64, stream: u64, what: &str) -> Result<Vec<f64>> {
    match given {
        Some(p) => {
            crate::error::check_dim("initial point", bounds.dim(), p.len())?;
            if !bounds.contains(p, 0.0) {
                return Err(Error::InvalidArgument(format!("{what} lies outside its box")));
            }
            Ok(p.to_vec())
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            Ok(bounds
                .lower()
                .iter()
                .zip(bounds.upper())
                .map(|(l, u)| if l < u { rng.gen_range(*l..=*u) } else { *l })
                .collect())
        }
    }
}

/// A solver error together with the iterations completed before it.
#[derive(Debug, Clone, Error)]
#[error("solver failed at iteration {iteration}: {source}")]
pub struct SolverFailure {
    pub iteration: usize,
    #[source]
    pub source: Error,
    pub partial: Trajectory,
}

impl SolverFailure {
    pub(crate) fn new(iteration: usize, source: Error, partial: Trajectory) -> Self {
        SolverFailure {
            iteration,
            source,
            partial,
        }
    }
}

pub type SolverResult = std::result::Result<Trajectory, SolverFailure>;

pub(crate) fn check_divergence(x: &[f64], bounds: &BoxSet, iteration: usize) -> Result<()> {
    let norm = crate::linalg::norm2(x);
    let limit = 1e6 * bounds.diameter().max(1.0);
    if !norm.is_finite() || norm > limit {
        return Err(Error::Diverged { iteration, norm });
    }
    Ok(())
}
