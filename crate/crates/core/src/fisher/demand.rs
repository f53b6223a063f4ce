use serde::{Deserialize, Serialize};

use super::market::{FisherMarket, UtilityKind};
use super::utility::{clamped_utility, utility_unchecked};
use crate::error::{check_dim, Error, Result};

/// Relative tolerance for treating two bang-per-buck ratios as tied.
pub const TIE_TOL: f64 = 1e-12;

/// A buyer's utility-maximizing bundle at given prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandResult {
    pub x: Vec<f64>,
    pub utility_value: f64,
    pub spent: f64,
    /// Multiplier of the budget constraint in `max b_i log u_i(x)`; equal to
    /// one for every homogeneous utility at positive prices.
    pub multiplier: f64,
}

/// Closed-form demand of buyer `i` at prices `p`.
///
/// Linear buyers split their budget equally over all goods whose
/// bang-per-buck `v_ij / p_j` is within [`TIE_TOL`] of the maximum.
pub fn demand(market: &FisherMarket, i: usize, p: &[f64]) -> Result<DemandResult> {
    check_dim("prices", market.n_goods(), p.len())?;
    let v = market.valuation(i);
    let b = market.budget(i);
    for (j, (vj, pj)) in v.iter().zip(p).enumerate() {
        if *vj > 0.0 && !(*pj > 0.0) {
            return Err(Error::UnboundedDemand { good: j, price: *pj });
        }
    }
    let x: Vec<f64> = match market.utility() {
        UtilityKind::Linear => {
            let ratio: Vec<f64> = v.iter().zip(p).map(|(vj, pj)| if *vj > 0.0 { vj / pj } else { 0.0 }).collect();
            let best = ratio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = (0..ratio.len()).filter(|&j| ratio[j] >= best * (1.0 - TIE_TOL)).collect();
            let share = b / ties.len() as f64;
            let mut x = vec![0.0; p.len()];
            for j in ties {
                x[j] = share / p[j];
            }
            x
        }
        UtilityKind::CobbDouglas => v
            .iter()
            .zip(p)
            .map(|(a, pj)| if *a > 0.0 { a * b / pj } else { 0.0 })
            .collect(),
        UtilityKind::Leontief => {
            let cost: f64 = v.iter().zip(p).map(|(vj, pj)| vj * pj).sum();
            v.iter().map(|vj| vj * b / cost).collect()
        }
    };
    let spent = x.iter().zip(p).map(|(a, c)| a * c).sum();
    Ok(DemandResult {
        utility_value: utility_unchecked(market.utility(), v, &x),
        x,
        spent,
        multiplier: 1.0,
    })
}

/// Demand of every buyer, row by row.
pub fn demand_all(market: &FisherMarket, p: &[f64]) -> Result<Vec<DemandResult>> {
    (0..market.n_buyers()).map(|i| demand(market, i, p)).collect()
}

/// `sum_i demand_i(p) - 1` per good. Its negation is a subgradient of the
/// auctioneer's value function at `p`.
pub fn excess_demand(market: &FisherMarket, p: &[f64]) -> Result<Vec<f64>> {
    let mut z = vec![-1.0; market.n_goods()];
    for d in demand_all(market, p)? {
        for (zj, xj) in z.iter_mut().zip(&d.x) {
            *zj += xj;
        }
    }
    Ok(z)
}

/// `sum_j p_j + sum_i b_i log u_i(x_i)`.
///
/// Returns `-inf` when some utility is not positive (or the allocation is
/// malformed); never fails.
pub fn eg_objective(market: &FisherMarket, p: &[f64], allocation: &[Vec<f64>]) -> f64 {
    if allocation.len() != market.n_buyers() || p.len() != market.n_goods() {
        return f64::NEG_INFINITY;
    }
    let mut total: f64 = p.iter().sum();
    for (i, x) in allocation.iter().enumerate() {
        if x.len() != market.n_goods() || x.iter().any(|v| !(*v >= 0.0)) {
            return f64::NEG_INFINITY;
        }
        let u = utility_unchecked(market.utility(), market.valuation(i), x);
        if !(u > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += market.budget(i) * u.ln();
    }
    total
}

/// Like [`eg_objective`] but with Cobb-Douglas bundles clamped, so interior
/// ascent iterates always get a finite value.
pub(crate) fn eg_objective_clamped(market: &FisherMarket, p: &[f64], allocation: &[Vec<f64>]) -> f64 {
    let mut total: f64 = p.iter().sum();
    for (i, x) in allocation.iter().enumerate() {
        let u = clamped_utility(market.utility(), market.valuation(i), x);
        if !(u > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += market.budget(i) * u.ln();
    }
    total
}
