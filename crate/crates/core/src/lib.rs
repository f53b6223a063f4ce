//! Solvers for convex-concave min-max Stackelberg games, where the inner
//! player's feasible set depends on the outer player's choice, with Fisher
//! market equilibrium computation as the main application.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod error;
pub mod fisher;
pub mod fixtures;
pub mod game;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod plot;
pub mod polynomial;
pub mod solvers;

pub use error::{Error, Result};
pub use game::{BoxSet, Constraint, Game, InnerSolution, KktOptions, Multipliers};
pub use oracle::{GridOracle, InnerOracle, OracleResponse, ProjectedAscentOracle};
pub use solvers::{SolverConfig, SolverFailure, SolverResult, StepSchedule, Trajectory};
