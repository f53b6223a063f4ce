use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Per-iteration record of a solver run.
///
/// Row `t` (0-based) holds the query point `x^(t)`, the inner response
/// `y^(t)` computed there, `f(x^(t), y^(t))`, and the step `eta_(t+1)` used to
/// move from `x^(t)` to `x^(t+1)`. The point reached after the last step is
/// kept separately in `final_x` / `final_y`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub iterates_x: Vec<Vec<f64>>,
    pub iterates_y: Vec<Vec<f64>>,
    pub objective: Vec<f64>,
    pub step: Vec<f64>,
    pub subgradient_norm: Vec<f64>,
    pub best_index: usize,
    pub final_x: Vec<f64>,
    pub final_y: Vec<f64>,
    pub final_objective: f64,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Trajectory {
            iterates_x: Vec::with_capacity(n),
            iterates_y: Vec::with_capacity(n),
            objective: Vec::with_capacity(n),
            step: Vec::with_capacity(n),
            subgradient_norm: Vec::with_capacity(n),
            final_objective: f64::NAN,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }

    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>, objective: f64, step: f64, subgradient_norm: f64) {
        // strict < keeps the smallest index among ties
        if self.objective.is_empty() || objective < self.objective[self.best_index] {
            self.best_index = self.objective.len();
        }
        self.iterates_x.push(x);
        self.iterates_y.push(y);
        self.objective.push(objective);
        self.step.push(step);
        self.subgradient_norm.push(subgradient_norm);
    }

    pub fn best_objective(&self) -> f64 {
        self.objective.get(self.best_index).copied().unwrap_or(f64::NAN)
    }

    pub fn best_x(&self) -> &[f64] {
        &self.iterates_x[self.best_index]
    }

    pub fn best_y(&self) -> &[f64] {
        &self.iterates_y[self.best_index]
    }

    /// Running minimum of the objective column.
    pub fn best_so_far(&self) -> Vec<f64> {
        prefix_min(&self.objective)
    }

    /// Largest recorded subgradient norm, an empirical Lipschitz constant of `V`.
    pub fn max_subgradient_norm(&self) -> f64 {
        self.subgradient_norm.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    /// CSV with header `iter,step,objective,best_objective` and, when
    /// `coordinates` is set, one column per coordinate of `x` and `y`.
    /// Numbers use 17 significant digits.
    pub fn to_csv(&self, coordinates: bool) -> String {
        let mut out = String::from("iter,step,objective,best_objective");
        let (n, m) = (
            self.iterates_x.first().map_or(0, Vec::len),
            self.iterates_y.first().map_or(0, Vec::len),
        );
        if coordinates {
            for i in 0..n {
                let _ = write!(out, ",x{i}");
            }
            for j in 0..m {
                let _ = write!(out, ",y{j}");
            }
        }
        out.push('\n');
        let best = self.best_so_far();
        for t in 0..self.len() {
            let _ = write!(
                out,
                "{},{},{},{}",
                t + 1,
                fmt_f64(self.step[t]),
                fmt_f64(self.objective[t]),
                fmt_f64(best[t])
            );
            if coordinates {
                for v in self.iterates_x[t].iter().chain(&self.iterates_y[t]) {
                    out.push(',');
                    out.push_str(&fmt_f64(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn prefix_min(values: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .iter()
        .map(|v| {
            best = best.min(*v);
            best
        })
        .collect()
}

/// Deterministic 17-significant-digit formatting.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
