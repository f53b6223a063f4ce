use serde::{Deserialize, Serialize};

use super::demand::{demand, eg_objective};
use super::market::FisherMarket;
use super::utility::utility_unchecked;

/// Competitive-equilibrium diagnostics for a price/allocation pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    /// `1 - sum_i x_ij` for priced goods, `max(sum_i x_ij - 1, 0)` for free goods.
    pub clearing_residual: Vec<f64>,
    /// `max_i (u_i(demand_i(p)) - u_i(x_i)) / u_i(demand_i(p))`.
    pub max_buyer_gap: f64,
    /// `max_i max(x_i . p - b_i, 0) / b_i`.
    pub max_budget_excess: f64,
    pub objective_value: f64,
    pub passed: bool,
}

impl EquilibriumReport {
    pub fn max_residual(&self) -> f64 {
        crate::linalg::norm_inf(&self.clearing_residual)
    }
}

/// Checks market clearing and buyer optimality; never fails.
///
/// Passes iff the clearing residual, the buyer gap and the relative budget
/// overspend are all at most `tol`. A buyer facing a zero price on a valued
/// good has unbounded demand and counts as a full shortfall (gap 1).
pub fn check_equilibrium(market: &FisherMarket, p: &[f64], allocation: &[Vec<f64>], tol: f64) -> EquilibriumReport {
    let m = market.n_goods();
    let mut totals = vec![0.0; m];
    for row in allocation {
        for (t, x) in totals.iter_mut().zip(row) {
            *t += x;
        }
    }
    let clearing_residual: Vec<f64> = totals
        .iter()
        .zip(p)
        .map(|(s, pj)| if *pj > 0.0 { 1.0 - s } else { (s - 1.0).max(0.0) })
        .collect();

    let mut max_buyer_gap = 0.0_f64;
    let mut max_budget_excess = 0.0_f64;
    for i in 0..market.n_buyers() {
        let x = allocation.get(i).map(Vec::as_slice).unwrap_or(&[]);
        if x.len() != m {
            max_buyer_gap = max_buyer_gap.max(1.0);
            continue;
        }
        let have = utility_unchecked(market.utility(), market.valuation(i), x);
        let gap = match demand(market, i, p) {
            Ok(d) => (d.utility_value - have) / d.utility_value.max(f64::MIN_POSITIVE),
            Err(_) => 1.0,
        };
        max_buyer_gap = max_buyer_gap.max(gap);
        let spent: f64 = x.iter().zip(p).map(|(a, c)| a * c).sum();
        let b = market.budget(i);
        max_budget_excess = max_budget_excess.max((spent - b).max(0.0) / b);
    }

    let max_res = crate::linalg::norm_inf(&clearing_residual);
    EquilibriumReport {
        passed: max_res <= tol && max_buyer_gap <= tol && max_budget_excess <= tol,
        clearing_residual,
        max_buyer_gap,
        max_budget_excess,
        objective_value: eg_objective(market, p, allocation),
    }
}
