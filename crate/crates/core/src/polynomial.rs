//! Games described by polynomial objectives and constraints, loadable from JSON.
//!
//! ```json
//! {
//!   "outer_set": {"lower": [-1], "upper": [1]},
//!   "inner_set": {"lower": [-1], "upper": [1]},
//!   "objective": [{"coef": 1, "x": [2], "y": [0]}, {"coef": 1, "y": [1]}, {"coef": 1}],
//!   "constraints": [[{"coef": -1, "x": [1]}, {"coef": -1, "y": [1]}]]
//! }
//! ```
//!
//! Each monomial is `coef * prod_i x_i^x[i] * prod_j y_j^y[j]`; missing
//! exponent lists mean all zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BoxSet, Constraint, Game};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    #[serde(default)]
    pub x: Vec<u32>,
    #[serde(default)]
    pub y: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<Monomial>);

impl Polynomial {
    fn exp(list: &[u32], i: usize) -> u32 {
        list.get(i).copied().unwrap_or(0)
    }

    fn term(vars: &[f64], exps: &[u32]) -> f64 {
        vars.iter()
            .enumerate()
            .map(|(i, v)| v.powi(Self::exp(exps, i) as i32))
            .product()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|m| m.coef * Self::term(x, &m.x) * Self::term(y, &m.y))
            .sum()
    }

    fn partial(vars: &[f64], exps: &[u32], k: usize) -> f64 {
        let e = Self::exp(exps, k);
        if e == 0 {
            return 0.0;
        }
        vars.iter()
            .enumerate()
            .map(|(i, v)| {
                let ei = Self::exp(exps, i);
                if i == k {
                    e as f64 * v.powi(ei as i32 - 1)
                } else {
                    v.powi(ei as i32)
                }
            })
            .product()
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                self.0
                    .iter()
                    .map(|m| m.coef * Self::partial(x, &m.x, k) * Self::term(y, &m.y))
                    .sum()
            })
            .collect()
    }

    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (0..y.len())
            .map(|k| {
                self.0
                    .iter()
                    .map(|m| m.coef * Self::term(x, &m.x) * Self::partial(y, &m.y, k))
                    .sum()
            })
            .collect()
    }

    /// True when every monomial has total `y`-degree at most one and no
    /// monomial couples `y` with itself, i.e. the polynomial is affine in `y`.
    pub fn is_affine_in_y(&self) -> bool {
        self.0.iter().all(|m| m.y.iter().sum::<u32>() <= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialGame {
    pub outer_set: BoxSet,
    pub inner_set: BoxSet,
    pub objective: Polynomial,
    #[serde(default)]
    pub constraints: Vec<Polynomial>,
}

impl PolynomialGame {
    pub fn from_json(text: &str) -> Result<Self> {
        let g: PolynomialGame = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        // BoxSet's serde path skips the constructor checks
        let outer = BoxSet::new(self.outer_set.lower().to_vec(), self.outer_set.upper().to_vec())?;
        let inner = BoxSet::new(self.inner_set.lower().to_vec(), self.inner_set.upper().to_vec())?;
        let (n, m) = (outer.dim(), inner.dim());
        for poly in std::iter::once(&self.objective).chain(&self.constraints) {
            for mono in &poly.0 {
                if mono.x.len() > n || mono.y.len() > m {
                    return Err(Error::Parse(format!(
                        "monomial exponent list longer than the game dimension ({n}, {m})"
                    )));
                }
                if !mono.coef.is_finite() {
                    return Err(Error::Parse("non-finite coefficient".into()));
                }
            }
        }
        Ok(())
    }

    pub fn to_game(&self) -> Game {
        let obj = self.objective.clone();
        let (o1, o2) = (obj.clone(), obj.clone());
        let mut game = Game::new(
            self.outer_set.clone(),
            self.inner_set.clone(),
            move |x, y| obj.eval(x, y),
            move |x, y| o1.grad_x(x, y),
            move |x, y| o2.grad_y(x, y),
        );
        for c in &self.constraints {
            let (c0, c1, c2) = (c.clone(), c.clone(), c.clone());
            let mut con = Constraint::new(
                move |x, y| c0.eval(x, y),
                move |x, y| c1.grad_x(x, y),
                move |x, y| c2.grad_y(x, y),
            );
            if c.is_affine_in_y() {
                con = con.affine_in_y();
            }
            game = game.with_constraint(con);
        }
        game
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const EXAMPLE1: &str = r#"{
        "outer_set": {"lower": [-1], "upper": [1]},
        "inner_set": {"lower": [-1], "upper": [1]},
        "objective": [{"coef": 1, "x": [2]}, {"coef": 1, "y": [1]}, {"coef": 1}],
        "constraints": [[{"coef": -1, "x": [1]}, {"coef": -1, "y": [1]}]]
    }"#;

    #[test]
    fn json_game_matches_compiled_fixture() {
        let g = PolynomialGame::from_json(EXAMPLE1).unwrap().to_game();
        let f = fixtures::example1();
        for &(x, y) in &[(0.3, -0.7), (-1.0, 1.0), (0.5, -0.5)] {
            let (x, y) = ([x], [y]);
            assert_eq!(g.objective(&x, &y).unwrap(), f.objective(&x, &y).unwrap());
            assert_eq!(g.grad_x_objective(&x, &y).unwrap(), f.grad_x_objective(&x, &y).unwrap());
            assert_eq!(g.grad_y_objective(&x, &y).unwrap(), f.grad_y_objective(&x, &y).unwrap());
            assert_eq!(g.constraint_values(&x, &y).unwrap(), f.constraint_values(&x, &y).unwrap());
        }
        assert!(g.constraints()[0].is_affine_in_y());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = Polynomial(vec![
            Monomial { coef: 2.0, x: vec![2, 1], y: vec![1] },
            Monomial { coef: -0.5, x: vec![0, 3], y: vec![2] },
        ]);
        let (x, y) = ([0.7, -0.3], [1.3]);
        let h = 1e-6;
        let gx = p.grad_x(&x, &y);
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (p.eval(&xp, &y) - p.eval(&xm, &y)) / (2.0 * h);
            assert!((fd - gx[k]).abs() < 1e-7);
        }
        let gy = p.grad_y(&x, &y);
        let fd = (p.eval(&x, &[y[0] + h]) - p.eval(&x, &[y[0] - h])) / (2.0 * h);
        assert!((fd - gy[0]).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_boxes_and_exponents() {
        let bad_box = EXAMPLE1.replace(r#""upper": [1]},
        "inner_set""#, r#""upper": [-2]},
        "inner_set""#);
        assert!(PolynomialGame::from_json(&bad_box).is_err());
        let bad_exp = EXAMPLE1.replace(r#""x": [2]"#, r#""x": [2, 1]"#);
        assert!(PolynomialGame::from_json(&bad_exp).is_err());
    }
}
