//! The Fisher market as a generic min-max Stackelberg game:
//! `min_{p} max_{X >= 0 : X p <= b} sum_j p_j + sum_i b_i log u_i(x_i)`.
//!
//! Allocations are flattened row-major (`y[i * m + j] = x_ij`).

use std::sync::Arc;

use super::demand::demand_all;
use super::market::FisherMarket;
use super::utility::{clamped_utility, subgradient_unchecked};
use crate::error::Result;
use crate::game::{BoxSet, Constraint, Game};
use crate::oracle::{InnerOracle, OracleResponse};

/// Upper bound standing in for `+inf` on price and allocation boxes.
pub const BIG: f64 = 1e9;

/// Builds the game; prices live in `[p_floor, BIG]^m`.
pub fn fisher_game(market: &FisherMarket) -> Game {
    let (n, m) = (market.n_buyers(), market.n_goods());
    let shared = Arc::new(market.clone());
    let outer = BoxSet::new(vec![market.price_floor(); m], vec![BIG; m]).expect("valid box");
    let inner = BoxSet::new(vec![0.0; n * m], vec![BIG; n * m]).expect("valid box");

    let mk = shared.clone();
    let objective = move |p: &[f64], y: &[f64]| {
        let mut total: f64 = p.iter().sum();
        for i in 0..n {
            let u = clamped_utility(mk.utility(), mk.valuation(i), &y[i * m..(i + 1) * m]);
            total += mk.budget(i) * u.ln();
        }
        total
    };
    let grad_x = move |p: &[f64], _: &[f64]| vec![1.0; p.len()];
    let mk = shared.clone();
    let grad_y = move |_: &[f64], y: &[f64]| {
        let mut g = Vec::with_capacity(n * m);
        for i in 0..n {
            let x = &y[i * m..(i + 1) * m];
            let u = clamped_utility(mk.utility(), mk.valuation(i), x);
            let scale = mk.budget(i) / u;
            g.extend(subgradient_unchecked(mk.utility(), mk.valuation(i), x).into_iter().map(|d| scale * d));
        }
        g
    };

    let mut game = Game::new(outer, inner, objective, grad_x, grad_y);
    for i in 0..n {
        let b = market.budget(i);
        let value = move |p: &[f64], y: &[f64]| b - y[i * m..(i + 1) * m].iter().zip(p).map(|(a, c)| a * c).sum::<f64>();
        let gx = move |_: &[f64], y: &[f64]| y[i * m..(i + 1) * m].iter().map(|a| -a).collect();
        let gy = move |p: &[f64], _: &[f64]| {
            let mut g = vec![0.0; n * m];
            for (j, pj) in p.iter().enumerate() {
                g[i * m + j] = -pj;
            }
            g
        };
        game = game.with_constraint(Constraint::new(value, gx, gy).affine_in_y());
    }
    game
}

/// Exact max-oracle from closed-form demand.
#[derive(Debug, Clone)]
pub struct FisherDemandOracle {
    market: FisherMarket,
    /// Report the analytic unit budget multipliers instead of recovering them.
    pub supply_multipliers: bool,
}

impl FisherDemandOracle {
    pub fn new(market: FisherMarket) -> Self {
        FisherDemandOracle {
            market,
            supply_multipliers: true,
        }
    }

    pub fn without_multipliers(mut self) -> Self {
        self.supply_multipliers = false;
        self
    }
}

impl InnerOracle for FisherDemandOracle {
    fn respond(&self, _game: &Game, p: &[f64]) -> Result<OracleResponse> {
        let rows = demand_all(&self.market, p)?;
        let y = rows.iter().flat_map(|d| d.x.iter().copied()).collect();
        Ok(OracleResponse {
            y,
            multipliers: self
                .supply_multipliers
                .then(|| rows.iter().map(|d| d.multiplier).collect()),
            gap: 0.0,
        })
    }
}

/// Unflattens a row-major allocation vector.
pub fn allocation_rows(y: &[f64], n_goods: usize) -> Vec<Vec<f64>> {
    y.chunks(n_goods).map(<[f64]>::to_vec).collect()
}
