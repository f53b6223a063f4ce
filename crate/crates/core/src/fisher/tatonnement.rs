//! Price dynamics for Fisher markets.
//!
//! Both routines record, per outer iteration `t`, the prices `p^(t-1)`, the
//! allocation the buyers report at those prices, the objective
//! `sum_j p_j + sum_i b_i log u_i(x_i)` at that pair, and the step used for
//! the update `p^(t) = max(p^(t-1) - eta_t (1 - sum_i x_i), p_floor)`.

use super::demand::{demand_all, eg_objective, eg_objective_clamped};
use super::market::FisherMarket;
use super::utility::{clamped_utility, subgradient_unchecked, utility_unchecked};
use crate::error::{check_dim, Error, Result};
use crate::linalg::norm2;
use crate::solvers::nested::sufficient_ascent;
use crate::solvers::{project_budget_set, SolverConfig, SolverFailure, SolverResult, Trajectory};

fn initial_prices(market: &FisherMarket, config: &SolverConfig) -> Result<Vec<f64>> {
    match &config.x0 {
        Some(p) => {
            check_dim("initial prices", market.n_goods(), p.len())?;
            if p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument("initial prices must be positive".into()));
            }
            Ok(p.clone())
        }
        None => {
            let level = market.budgets().iter().sum::<f64>() / market.n_goods() as f64;
            Ok(vec![level; market.n_goods()])
        }
    }
}

/// Adds `eta * excess` to the prices and floors them at `p_floor`.
fn update_prices(p: &[f64], excess: &[f64], eta: f64, floor: f64) -> Vec<f64> {
    p.iter().zip(excess).map(|(pj, zj)| (pj + eta * zj).max(floor)).collect()
}

fn excess_of(rows: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut z = vec![-1.0; m];
    for row in rows {
        for (zj, x) in z.iter_mut().zip(row) {
            *zj += x;
        }
    }
    z
}

fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

/// Tâtonnement with exact (closed-form) demand: max-oracle gradient descent
/// on the auctioneer's value function.
pub fn tatonnement(market: &FisherMarket, config: &SolverConfig) -> SolverResult {
    let mut traj = Trajectory::with_capacity(config.outer_iters);
    let fail = |t: usize, e: Error, traj: Trajectory| SolverFailure::new(t, e, traj);
    if let Err(e) = config.outer_schedule.validate(config.outer_iters).and_then(|_| {
        if config.outer_iters == 0 {
            Err(Error::InvalidArgument("outer iterations must be >= 1".into()))
        } else {
            Ok(())
        }
    }) {
        return Err(fail(0, e, traj));
    }
    let mut p = match initial_prices(market, config) {
        Ok(p) => p,
        Err(e) => return Err(fail(0, e, traj)),
    };
    let floor = market.price_floor();
    let m = market.n_goods();

    for t in 1..=config.outer_iters {
        let rows: Vec<Vec<f64>> = match demand_all(market, &p) {
            Ok(d) => d.into_iter().map(|r| r.x).collect(),
            Err(e) => return Err(fail(t, e, traj)),
        };
        let objective = eg_objective(market, &p, &rows);
        let excess = excess_of(&rows, m);
        let eta = config.outer_schedule.step(t);
        let next = update_prices(&p, &excess, eta, floor);
        traj.push(p, flatten(&rows), objective, eta, norm2(&excess));
        p = next;
    }

    match demand_all(market, &p) {
        Ok(d) => {
            let rows: Vec<Vec<f64>> = d.into_iter().map(|r| r.x).collect();
            traj.final_objective = eg_objective(market, &p, &rows);
            traj.final_y = flatten(&rows);
            traj.final_x = p;
            Ok(traj)
        }
        Err(e) => Err(fail(config.outer_iters + 1, e, traj)),
    }
}

/// `x_ij = b_i / (m p_j)`: each buyer spreads its budget evenly over goods.
pub fn even_split_allocation(market: &FisherMarket, p: &[f64]) -> Vec<Vec<f64>> {
    let m = market.n_goods() as f64;
    (0..market.n_buyers())
        .map(|i| p.iter().map(|pj| market.budget(i) / (m * pj)).collect())
        .collect()
}

const MAX_HALVINGS: usize = 40;

struct InnerState {
    rows: Vec<Vec<f64>>,
    /// Per-buyer step multiplier in `(0, 1]`, doubled before each step and
    /// halved whenever a step fails the sufficient-ascent test.
    scale: Vec<f64>,
}

impl InnerState {
    /// Projected gradient ascent on each buyer's `b_i log u_i(x_i)` over its
    /// budget set at `p`, starting from the previous allocation projected
    /// onto that set (or from an even budget split when that projection has
    /// zero utility). A buyer stops early once no step size improves its
    /// objective.
    fn ascend(&mut self, market: &FisherMarket, p: &[f64], config: &SolverConfig) -> Result<()> {
        let kind = market.utility();
        for i in 0..market.n_buyers() {
            let v = market.valuation(i);
            let b = market.budget(i);
            self.rows[i] = project_budget_set(&self.rows[i], p, b)?;
            if !(utility_unchecked(kind, v, &self.rows[i]) > 0.0) {
                let m = p.len() as f64;
                self.rows[i] = p.iter().map(|pj| b / (m * pj)).collect();
            }
            for s in 1..=config.inner_iters {
                let x = &self.rows[i];
                let u = clamped_utility(kind, v, x);
                if !(u > 0.0) {
                    return Err(Error::ZeroUtility { buyer: i });
                }
                let current = b * u.ln();
                let grad: Vec<f64> = subgradient_unchecked(kind, v, x).into_iter().map(|g| b / u * g).collect();
                self.scale[i] = (2.0 * self.scale[i]).min(1.0);
                let mut improved = None;
                for _ in 0..MAX_HALVINGS {
                    let eta = config.inner_schedule.step(s) * self.scale[i];
                    let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + eta * g).collect();
                    let cand = project_budget_set(&trial, p, b)?;
                    let cu = clamped_utility(kind, v, &cand);
                    if cu > 0.0 && sufficient_ascent(current, b * cu.ln(), x, &cand, &grad, eta) {
                        improved = Some(cand);
                        break;
                    }
                    self.scale[i] *= 0.5;
                }
                match improved {
                    Some(next) => self.rows[i] = next,
                    None => break,
                }
            }
        }
        Ok(())
    }
}

/// Nested tâtonnement: buyers approach their demands by projected gradient
/// ascent (with exact projection onto the budget set) for
/// `inner_iters` steps per price update. Allocations carry over between
/// price updates and start from [`even_split_allocation`] at `p^(0)`.
pub fn nested_tatonnement(market: &FisherMarket, config: &SolverConfig) -> SolverResult {
    let mut traj = Trajectory::with_capacity(config.outer_iters);
    let fail = |t: usize, e: Error, traj: Trajectory| SolverFailure::new(t, e, traj);
    if let Err(e) = config.validate() {
        return Err(fail(0, e, traj));
    }
    let mut p = match initial_prices(market, config) {
        Ok(p) => p,
        Err(e) => return Err(fail(0, e, traj)),
    };
    let floor = market.price_floor();
    let m = market.n_goods();
    let mut state = InnerState {
        rows: even_split_allocation(market, &p),
        scale: vec![1.0; market.n_buyers()],
    };

    for t in 1..=config.outer_iters {
        if let Err(e) = state.ascend(market, &p, config) {
            return Err(fail(t, e, traj));
        }
        let objective = eg_objective_clamped(market, &p, &state.rows);
        let excess = excess_of(&state.rows, m);
        let eta = config.outer_schedule.step(t);
        let next = update_prices(&p, &excess, eta, floor);
        traj.push(p, flatten(&state.rows), objective, eta, norm2(&excess));
        p = next;
    }

    if let Err(e) = state.ascend(market, &p, config) {
        return Err(fail(config.outer_iters + 1, e, traj));
    }
    traj.final_objective = eg_objective_clamped(market, &p, &state.rows);
    traj.final_y = flatten(&state.rows);
    traj.final_x = p;
    Ok(traj)
}
