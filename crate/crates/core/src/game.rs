//! Min-max Stackelberg games with dependent (parameterized) inner feasible sets.
//!
//! A game is `min_{x in X} max_{y in Y : g(x, y) >= 0} f(x, y)` where `X` and
//! `Y` are boxes. The outer player's loss is the value function
//! `V(x) = max_{y in Y : g(x, y) >= 0} f(x, y)`, whose subgradients are
//! gradients of the Lagrangian at an inner optimum:
//! `grad_x f(x, y*) + sum_k lambda_k grad_x g_k(x, y*)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{nnls, norm2};
use crate::oracle::InnerOracle;

/// Default feasibility tolerance for `g_k(x, y) >= -tol`.
pub const FEAS_TOL: f64 = 1e-9;
/// Default tolerance below which a constraint counts as active.
pub const ACTIVE_TOL: f64 = 1e-7;
/// Default central finite-difference step.
pub const FD_STEP: f64 = 1e-5;

pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Axis-aligned box `{p : lower <= p <= upper}` with finite bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box upper bounds", lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidArgument("box must have dimension >= 1".into()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidArgument(format!("box bound {i} is not finite")));
            }
            if l > u {
                return Err(Error::InvalidArgument(format!(
                    "box coordinate {i} is empty: lower {l} > upper {u}"
                )));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    /// `[lower, upper]^dim`.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        BoxSet::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// Euclidean projection (coordinatewise clamp).
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// Evenly spaced grid points along coordinate `i`, endpoints included.
    pub fn axis_grid(&self, i: usize, resolution: usize) -> Vec<f64> {
        let (l, u) = (self.lower[i], self.upper[i]);
        if resolution <= 1 || l == u {
            return vec![0.5 * (l + u)];
        }
        let h = (u - l) / (resolution - 1) as f64;
        (0..resolution)
            .map(|k| if k + 1 == resolution { u } else { l + h * k as f64 })
            .collect()
    }

    /// Cartesian-product grid over the whole box.
    pub fn grid(&self, resolution: usize) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::with_capacity(self.dim())];
        for i in 0..self.dim() {
            let axis = self.axis_grid(i, resolution);
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

/// One parameterized constraint `g(x, y) >= 0` with its partial gradients.
#[derive(Clone)]
pub struct Constraint {
    value: ScalarFn,
    grad_x: VectorFn,
    grad_y: VectorFn,
    affine_in_y: bool,
}

impl Constraint {
    pub fn new(
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_y: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Constraint {
            value: Arc::new(value),
            grad_x: Arc::new(grad_x),
            grad_y: Arc::new(grad_y),
            affine_in_y: false,
        }
    }

    /// Marks the constraint as affine in `y`, which makes halfspace
    /// projection onto `{y : g(x, y) >= 0}` exact.
    pub fn affine_in_y(mut self) -> Self {
        self.affine_in_y = true;
        self
    }

    pub fn is_affine_in_y(&self) -> bool {
        self.affine_in_y
    }
}

/// A min-max Stackelberg game over boxes.
///
/// Callbacks must be pure and reentrant: the same game value may be shared by
/// solver runs on different threads.
#[derive(Clone)]
pub struct Game {
    objective: ScalarFn,
    grad_x_objective: VectorFn,
    grad_y_objective: VectorFn,
    constraints: Vec<Constraint>,
    outer_set: BoxSet,
    inner_set: BoxSet,
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Game")
            .field("dim_outer", &self.dim_outer())
            .field("dim_inner", &self.dim_inner())
            .field("constraints", &self.constraints.len())
            .field("outer_set", &self.outer_set)
            .field("inner_set", &self.inner_set)
            .finish()
    }
}

impl Game {
    pub fn new(
        outer_set: BoxSet,
        inner_set: BoxSet,
        objective: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        grad_x_objective: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_y_objective: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Game {
            objective: Arc::new(objective),
            grad_x_objective: Arc::new(grad_x_objective),
            grad_y_objective: Arc::new(grad_y_objective),
            constraints: Vec::new(),
            outer_set,
            inner_set,
        }
    }

    pub fn with_constraint(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn dim_outer(&self) -> usize {
        self.outer_set.dim()
    }

    pub fn dim_inner(&self) -> usize {
        self.inner_set.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn outer_set(&self) -> &BoxSet {
        &self.outer_set
    }

    pub fn inner_set(&self) -> &BoxSet {
        &self.inner_set
    }

    fn check_point(&self, x: &[f64], y: &[f64]) -> Result<()> {
        check_dim("outer point", self.dim_outer(), x.len())?;
        check_dim("inner point", self.dim_inner(), y.len())
    }

    pub fn objective(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x, y)?;
        Ok((self.objective)(x, y))
    }

    pub fn grad_x_objective(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, y)?;
        let g = (self.grad_x_objective)(x, y);
        check_dim("grad_x objective", self.dim_outer(), g.len())?;
        Ok(g)
    }

    pub fn grad_y_objective(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, y)?;
        let g = (self.grad_y_objective)(x, y);
        check_dim("grad_y objective", self.dim_inner(), g.len())?;
        Ok(g)
    }

    pub fn constraint_values(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, y)?;
        Ok(self.constraints.iter().map(|c| (c.value)(x, y)).collect())
    }

    pub fn constraint_value(&self, k: usize, x: &[f64], y: &[f64]) -> f64 {
        (self.constraints[k].value)(x, y)
    }

    pub fn grad_x_constraint(&self, k: usize, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let g = (self.constraints[k].grad_x)(x, y);
        check_dim("grad_x constraint", self.dim_outer(), g.len())?;
        Ok(g)
    }

    pub fn grad_y_constraint(&self, k: usize, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let g = (self.constraints[k].grad_y)(x, y);
        check_dim("grad_y constraint", self.dim_inner(), g.len())?;
        Ok(g)
    }

    /// Worst constraint violation `max(0, max_k -g_k(x, y))`.
    pub fn constraint_violation(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self
            .constraint_values(x, y)?
            .into_iter()
            .fold(0.0_f64, |m, g| m.max(-g)))
    }
}

/// KKT multipliers of the inner problem's parameterized constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers(Vec<f64>);

impl Multipliers {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if let Some((k, v)) = lambda.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "multiplier {k} = {v} is not nonnegative"
            )));
        }
        Ok(Multipliers(lambda))
    }

    pub fn zeros(k: usize) -> Self {
        Multipliers(vec![0.0; k])
    }

    pub fn lambda(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An inner best response at a fixed outer point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSolution {
    pub y_star: Vec<f64>,
    pub value: f64,
    pub multipliers: Multipliers,
    /// Suboptimality bound guaranteed by the producing oracle.
    pub oracle_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktOptions {
    pub active_tol: f64,
    /// Stationarity residual threshold, relative to `1 + |grad_y f|`.
    pub residual_tol: f64,
}

impl Default for KktOptions {
    fn default() -> Self {
        KktOptions {
            active_tol: ACTIVE_TOL,
            residual_tol: 1e-6,
        }
    }
}

impl KktOptions {
    /// Accepts the best least-squares multipliers whatever the residual.
    pub fn lenient() -> Self {
        KktOptions {
            residual_tol: f64::INFINITY,
            ..Default::default()
        }
    }
}

/// True iff `x` and `y` lie in their boxes and every constraint holds, all within `tol`.
pub fn feasible(game: &Game, x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    let g = game.constraint_values(x, y)?;
    Ok(game.outer_set.contains(x, tol)
        && game.inner_set.contains(y, tol)
        && g.iter().all(|v| *v >= -tol))
}

/// One element of the subdifferential of `V` at `x`, built from the inner
/// solution's optimum and multipliers.
pub fn envelope_subgradient(game: &Game, x: &[f64], sol: &InnerSolution) -> Result<Vec<f64>> {
    check_dim("multipliers", game.num_constraints(), sol.multipliers.len())?;
    let y = &sol.y_star;
    let mut grad = game.grad_x_objective(x, y)?;
    for (k, &lambda) in sol.multipliers.lambda().iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let gk = game.grad_x_constraint(k, x, y)?;
        crate::linalg::axpy(lambda, &gk, &mut grad);
    }
    Ok(grad)
}

/// Recovers KKT multipliers for an inner optimum `y_star` at `x`.
///
/// Constraints with `g_k > active_tol` get `lambda_k = 0`. The remaining
/// multipliers, together with multipliers for active faces of the inner box,
/// solve the stationarity system
/// `grad_y f + sum_k lambda_k grad_y g_k + sum_faces mu_j n_j = 0`
/// in the nonnegative least-squares sense.
pub fn kkt_multipliers(
    game: &Game,
    x: &[f64],
    y_star: &[f64],
    opts: &KktOptions,
) -> Result<Multipliers> {
    let grad_f = game.grad_y_objective(x, y_star)?;
    let g = game.constraint_values(x, y_star)?;
    let m = game.dim_inner();

    let active: Vec<usize> = (0..g.len()).filter(|&k| g[k] <= opts.active_tol).collect();
    let mut columns = Vec::with_capacity(active.len() + m);
    for &k in &active {
        columns.push(game.grad_y_constraint(k, x, y_star)?);
    }
    let (lo, hi) = (game.inner_set.lower(), game.inner_set.upper());
    for j in 0..m {
        // upper face u_j - y_j >= 0 has gradient -e_j; lower face y_j - l_j >= 0 has +e_j
        if y_star[j] >= hi[j] - opts.active_tol {
            let mut e = vec![0.0; m];
            e[j] = -1.0;
            columns.push(e);
        }
        if y_star[j] <= lo[j] + opts.active_tol {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            columns.push(e);
        }
    }

    let rhs: Vec<f64> = grad_f.iter().map(|v| -v).collect();
    let sol = nnls(&columns, &rhs);
    let threshold = opts.residual_tol * (1.0 + norm2(&grad_f));
    if sol.residual > threshold {
        return Err(Error::NotStationary {
            residual: sol.residual,
            threshold,
        });
    }

    let mut lambda = vec![0.0; g.len()];
    for (pos, &k) in active.iter().enumerate() {
        lambda[k] = sol.coefficients[pos];
    }
    Ok(Multipliers(lambda))
}

/// Evaluates `V(x)` through `oracle`, recovering multipliers by
/// [`kkt_multipliers`] when the oracle does not supply them.
pub fn value_function(
    game: &Game,
    x: &[f64],
    oracle: &dyn InnerOracle,
    opts: &KktOptions,
) -> Result<InnerSolution> {
    check_dim("outer point", game.dim_outer(), x.len())?;
    if !game.outer_set.contains(x, FEAS_TOL) {
        return Err(Error::InvalidArgument("query point lies outside the outer set".into()));
    }
    let resp = oracle.respond(game, x)?;
    check_dim("oracle response", game.dim_inner(), resp.y.len())?;
    let violation = game.constraint_violation(x, &resp.y)?;
    if violation > FEAS_TOL || !game.inner_set.contains(&resp.y, FEAS_TOL) {
        return Err(Error::Infeasible(format!(
            "oracle returned a point violating the constraints by {violation:.3e}"
        )));
    }
    let multipliers = match resp.multipliers {
        Some(l) => {
            check_dim("oracle multipliers", game.num_constraints(), l.len())?;
            Multipliers::new(l)?
        }
        None => kkt_multipliers(game, x, &resp.y, opts)?,
    };
    let value = game.objective(x, &resp.y)?;
    Ok(InnerSolution {
        y_star: resp.y,
        value,
        multipliers,
        oracle_gap: resp.gap,
    })
}

/// How the outer minimum `min_x V(x)` is obtained when checking equilibria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterReference {
    /// Scan `V` over a grid of the outer box (outer dimension <= 2).
    Grid { resolution: usize },
    /// A caller-supplied estimate, e.g. the best value of a long solver run.
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StackelbergReport {
    pub objective: f64,
    pub value: f64,
    pub min_value: f64,
    /// `V(x) - f(x, y)`; the inner player is `delta`-optimal iff this is at most `delta`.
    pub inner_gap: f64,
    /// `V(x) - min V`; the outer player is `eps`-optimal iff this is at most `eps`.
    pub outer_gap: f64,
    pub is_equilibrium: bool,
}

/// Checks whether `(x, y)` is an `(eps, delta)`-Stackelberg equilibrium.
pub fn check_stackelberg(
    game: &Game,
    x: &[f64],
    y: &[f64],
    eps: f64,
    delta: f64,
    oracle: &dyn InnerOracle,
    outer: OuterReference,
) -> Result<StackelbergReport> {
    if !feasible(game, x, y, FEAS_TOL)? {
        return Err(Error::Infeasible("candidate (x, y) is not feasible".into()));
    }
    let opts = KktOptions::lenient();
    let objective = game.objective(x, y)?;
    let value = value_function(game, x, oracle, &opts)?.value;
    let min_value = match outer {
        OuterReference::Value(v) => v,
        OuterReference::Grid { resolution } => {
            if game.dim_outer() > 2 {
                return Err(Error::Unsupported(
                    "grid outer reference needs outer dimension <= 2".into(),
                ));
            }
            let mut best = f64::INFINITY;
            for xg in game.outer_set.grid(resolution) {
                best = best.min(value_function(game, &xg, oracle, &opts)?.value);
            }
            best.min(value)
        }
    };
    let inner_gap = value - objective;
    let outer_gap = value - min_value;
    let slack = 1e-9 * (1.0 + value.abs());
    Ok(StackelbergReport {
        objective,
        value,
        min_value,
        inner_gap,
        outer_gap,
        is_equilibrium: inner_gap <= delta + slack && outer_gap <= eps + slack,
    })
}

fn require_small(game: &Game) -> Result<()> {
    if game.dim_outer() > 2 || game.dim_inner() > 2 {
        return Err(Error::Unsupported(
            "grid min-max evaluation supports dimensions <= 2 only".into(),
        ));
    }
    Ok(())
}

/// `max_y min_{x : g(x, y) >= 0} f(x, y)` evaluated on a grid.
///
/// Inner `y` values for which no grid `x` is feasible are skipped.
pub fn max_min_value(game: &Game, resolution: usize) -> Result<f64> {
    require_small(game)?;
    let xs = game.outer_set.grid(resolution);
    let mut best = f64::NEG_INFINITY;
    for y in game.inner_set.grid(resolution) {
        let mut inner = f64::INFINITY;
        for x in &xs {
            if game.constraint_values(x, &y)?.iter().all(|g| *g >= -FEAS_TOL) {
                inner = inner.min(game.objective(x, &y)?);
            }
        }
        if inner.is_finite() {
            best = best.max(inner);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Infeasible("no feasible grid pair".into()))
    }
}

/// `min_x max_{y : g(x, y) >= 0} f(x, y)` evaluated on a grid.
pub fn min_max_value(game: &Game, resolution: usize) -> Result<f64> {
    require_small(game)?;
    let ys = game.inner_set.grid(resolution);
    let mut best = f64::INFINITY;
    for x in game.outer_set.grid(resolution) {
        let mut inner = f64::NEG_INFINITY;
        for y in &ys {
            if game.constraint_values(&x, y)?.iter().all(|g| *g >= -FEAS_TOL) {
                inner = inner.max(game.objective(&x, y)?);
            }
        }
        if inner.is_finite() {
            best = best.min(inner);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Infeasible("no feasible grid pair".into()))
    }
}
