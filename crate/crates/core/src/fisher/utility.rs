//! Buyer utilities and their (super)gradients.

use super::market::{FisherMarket, UtilityKind};
use crate::error::{check_dim, Error, Result};

/// Lower clamp applied to Cobb-Douglas consumption before gradients and logs.
pub const X_FLOOR: f64 = 1e-12;

fn check_bundle(market: &FisherMarket, x: &[f64]) -> Result<()> {
    check_dim("bundle", market.n_goods(), x.len())?;
    match x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        Some((good, v)) => Err(Error::NegativeConsumption { good, value: *v }),
        None => Ok(()),
    }
}

/// `u_i(x)`; `x` must be nonnegative.
pub fn utility(market: &FisherMarket, i: usize, x: &[f64]) -> Result<f64> {
    check_bundle(market, x)?;
    Ok(utility_unchecked(market.utility(), market.valuation(i), x))
}

pub(crate) fn utility_unchecked(kind: UtilityKind, v: &[f64], x: &[f64]) -> f64 {
    match kind {
        UtilityKind::Linear => v.iter().zip(x).map(|(a, b)| a * b).sum(),
        UtilityKind::CobbDouglas => v
            .iter()
            .zip(x)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| b.powf(*a))
            .product(),
        UtilityKind::Leontief => leontief_argmin(v, x).map_or(0.0, |j| x[j] / v[j]),
    }
}

/// Smallest index attaining `min_j x_j / v_j` over goods with `v_j > 0`.
fn leontief_argmin(v: &[f64], x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (vj, xj)) in v.iter().zip(x).enumerate() {
        if *vj > 0.0 {
            let r = xj / vj;
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((j, r));
            }
        }
    }
    best.map(|(j, _)| j)
}

/// A supergradient of `u_i` at `x`.
///
/// Linear: `v_i`. Cobb-Douglas: `u a_j / x_j` with `x` clamped below at
/// [`X_FLOOR`]. Leontief: `e_j / v_ij` at the smallest-index argmin `j`.
pub fn utility_subgradient(market: &FisherMarket, i: usize, x: &[f64]) -> Result<Vec<f64>> {
    check_bundle(market, x)?;
    Ok(subgradient_unchecked(market.utility(), market.valuation(i), x))
}

pub(crate) fn subgradient_unchecked(kind: UtilityKind, v: &[f64], x: &[f64]) -> Vec<f64> {
    match kind {
        UtilityKind::Linear => v.to_vec(),
        UtilityKind::CobbDouglas => {
            let clamped: Vec<f64> = x.iter().map(|b| b.max(X_FLOOR)).collect();
            let u = utility_unchecked(kind, v, &clamped);
            v.iter().zip(&clamped).map(|(a, b)| u * a / b).collect()
        }
        UtilityKind::Leontief => {
            let mut g = vec![0.0; x.len()];
            if let Some(j) = leontief_argmin(v, x) {
                g[j] = 1.0 / v[j];
            }
            g
        }
    }
}

/// `u_i` as used inside logs and ascent steps: Cobb-Douglas bundles are
/// clamped at [`X_FLOOR`] so the value stays positive.
pub(crate) fn clamped_utility(kind: UtilityKind, v: &[f64], x: &[f64]) -> f64 {
    match kind {
        UtilityKind::CobbDouglas => {
            let clamped: Vec<f64> = x.iter().map(|b| b.max(X_FLOOR)).collect();
            utility_unchecked(kind, v, &clamped)
        }
        _ => utility_unchecked(kind, v, x),
    }
}
