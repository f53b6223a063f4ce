use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Utility family shared by all buyers of a market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityKind {
    Linear,
    CobbDouglas,
    Leontief,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 3] = [UtilityKind::Linear, UtilityKind::CobbDouglas, UtilityKind::Leontief];

    pub fn name(self) -> &'static str {
        match self {
            UtilityKind::Linear => "linear",
            UtilityKind::CobbDouglas => "cobb-douglas",
            UtilityKind::Leontief => "leontief",
        }
    }
}

impl std::str::FromStr for UtilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(UtilityKind::Linear),
            "cobb-douglas" | "cobb_douglas" | "cd" => Ok(UtilityKind::CobbDouglas),
            "leontief" => Ok(UtilityKind::Leontief),
            other => Err(Error::Parse(format!("unknown utility family '{other}'"))),
        }
    }
}

impl std::fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A Fisher market: budgeted buyers, one divisible unit of each good.
///
/// For Cobb-Douglas markets the valuation rows are the exponents and are
/// normalized to sum to one on construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherMarket {
    budgets: Vec<f64>,
    valuations: Vec<Vec<f64>>,
    utility: UtilityKind,
}

#[derive(Deserialize)]
struct MarketFile {
    budgets: Vec<f64>,
    valuations: Vec<Vec<f64>>,
    utility: UtilityKind,
}

impl FisherMarket {
    pub fn new(budgets: Vec<f64>, valuations: Vec<Vec<f64>>, utility: UtilityKind) -> Result<Self> {
        Self::with_warnings(budgets, valuations, utility).map(|(m, _)| m)
    }

    /// Like [`FisherMarket::new`], also returning a warning per Cobb-Douglas
    /// row that had to be renormalized.
    pub fn with_warnings(
        budgets: Vec<f64>,
        mut valuations: Vec<Vec<f64>>,
        utility: UtilityKind,
    ) -> Result<(Self, Vec<String>)> {
        if budgets.is_empty() {
            return Err(Error::InvalidArgument("market needs at least one buyer".into()));
        }
        if valuations.len() != budgets.len() {
            return Err(Error::Dimension {
                what: "valuation rows",
                expected: budgets.len(),
                got: valuations.len(),
            });
        }
        let goods = valuations[0].len();
        if goods == 0 {
            return Err(Error::InvalidArgument("market needs at least one good".into()));
        }
        for (i, b) in budgets.iter().enumerate() {
            if !(*b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidArgument(format!("budget of buyer {i} must be positive, got {b}")));
            }
        }
        let mut warnings = Vec::new();
        for (i, row) in valuations.iter_mut().enumerate() {
            if row.len() != goods {
                return Err(Error::Dimension {
                    what: "valuation row",
                    expected: goods,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!("valuations of buyer {i} must be finite and >= 0")));
            }
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(Error::InvalidArgument(format!("buyer {i} values no good")));
            }
            if utility == UtilityKind::CobbDouglas {
                if (sum - 1.0).abs() > 1e-9 {
                    warnings.push(format!("buyer {i}: cobb-douglas exponents sum to {sum}, normalized"));
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        Ok((
            FisherMarket {
                budgets,
                valuations,
                utility,
            },
            warnings,
        ))
    }

    pub fn from_json(text: &str) -> Result<(Self, Vec<String>)> {
        let f: MarketFile = serde_json::from_str(text)?;
        Self::with_warnings(f.budgets, f.valuations, f.utility)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("market serializes")
    }

    pub fn n_buyers(&self) -> usize {
        self.budgets.len()
    }

    pub fn n_goods(&self) -> usize {
        self.valuations[0].len()
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn budget(&self, i: usize) -> f64 {
        self.budgets[i]
    }

    pub fn valuations(&self) -> &[Vec<f64>] {
        &self.valuations
    }

    pub fn valuation(&self, i: usize) -> &[f64] {
        &self.valuations[i]
    }

    pub fn utility(&self) -> UtilityKind {
        self.utility
    }

    /// Smallest admissible price, `1e-6 * sum(b) / m`. Price dynamics floor
    /// prices here so that demand stays bounded.
    pub fn price_floor(&self) -> f64 {
        1e-6 * self.budgets.iter().sum::<f64>() / self.n_goods() as f64
    }
}

/// Parameters for random market generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub n_buyers: usize,
    pub n_goods: usize,
    pub budget_range: (f64, f64),
    pub valuation_range: (f64, f64),
    pub utility: UtilityKind,
}

impl MarketSpec {
    /// 5 buyers, 8 goods, budgets `U[100, 1000]`, valuations `U[5, 15]`.
    pub fn standard(utility: UtilityKind) -> Self {
        MarketSpec {
            n_buyers: 5,
            n_goods: 8,
            budget_range: (100.0, 1000.0),
            valuation_range: (5.0, 15.0),
            utility,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_buyers == 0 || self.n_goods == 0 {
            return Err(Error::InvalidArgument("need at least one buyer and one good".into()));
        }
        for (what, (lo, hi)) in [("budget", self.budget_range), ("valuation", self.valuation_range)] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} range [{lo}, {hi}] must be positive and ordered")));
            }
        }
        Ok(())
    }

    /// Draws a market from `rng`: budgets first (buyer order), then valuations
    /// row by row.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<FisherMarket> {
        self.validate()?;
        let (bl, bh) = self.budget_range;
        let (vl, vh) = self.valuation_range;
        let budgets: Vec<f64> = (0..self.n_buyers).map(|_| rng.gen_range(bl..=bh)).collect();
        let valuations: Vec<Vec<f64>> = (0..self.n_buyers)
            .map(|_| (0..self.n_goods).map(|_| rng.gen_range(vl..=vh)).collect())
            .collect();
        FisherMarket::new(budgets, valuations, self.utility)
    }
}

/// Deterministic random market for `seed`.
pub fn generate_market(
    n_buyers: usize,
    n_goods: usize,
    seed: u64,
    budget_range: (f64, f64),
    valuation_range: (f64, f64),
    utility: UtilityKind,
) -> Result<FisherMarket> {
    let spec = MarketSpec {
        n_buyers,
        n_goods,
        budget_range,
        valuation_range,
        utility,
    };
    spec.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}
