//! Fisher markets: utilities, closed-form demand, the convex-concave
//! auctioneer/buyer game, price dynamics and equilibrium checks.

mod demand;
mod equilibrium;
mod game;
mod market;
mod tatonnement;
mod utility;

pub use demand::{demand, demand_all, eg_objective, excess_demand, DemandResult, TIE_TOL};
pub use equilibrium::{check_equilibrium, EquilibriumReport};
pub use game::{allocation_rows, fisher_game, FisherDemandOracle, BIG};
pub use market::{generate_market, FisherMarket, MarketSpec, UtilityKind};
pub use tatonnement::{even_split_allocation, nested_tatonnement, tatonnement};
pub use utility::{utility, utility_subgradient, X_FLOOR};

use crate::solvers::{SolverConfig, StepSchedule};

/// Outer-step preset used for Fisher experiments: `5 / sqrt(t)`.
pub fn preset_schedule() -> StepSchedule {
    StepSchedule::SqrtDecay { base: 5.0 }
}

/// Tâtonnement configuration with the Fisher preset and `p^(0) = prices`.
pub fn preset_config(outer_iters: usize, inner_iters: usize, prices: Vec<f64>) -> SolverConfig {
    SolverConfig::new(outer_iters, preset_schedule())
        .with_inner(inner_iters, StepSchedule::Constant { base: 5.0 })
        .with_x0(prices)
}
