//! Euclidean projections onto boxes and alternating projections onto
//! intersections of a box with (linearized) constraint halfspaces.

use crate::error::{check_dim, Error, Result};
use crate::game::{BoxSet, Game};
use crate::linalg::{axpy, dot};

/// Coordinatewise clamp of `p` onto `bounds`.
pub fn project_box(p: &[f64], bounds: &BoxSet) -> Result<Vec<f64>> {
    check_dim("point", bounds.dim(), p.len())?;
    Ok(bounds.project(p))
}

/// Projects `p` onto the halfspace `{z : normal . z <= offset}`.
fn project_halfspace(p: &mut [f64], normal: &[f64], offset: f64) {
    let excess = dot(normal, p) - offset;
    let nn = dot(normal, normal);
    if excess > 0.0 && nn > 0.0 {
        axpy(-excess / nn, normal, p);
    }
}

/// Finds a point of `{y in Y : g(x, y) >= 0}` by alternating between the
/// inner box and each constraint's halfspace linearization at the current
/// point. The linearization is exact for constraints affine in `y`.
///
/// Stops as soon as the point is in the box and every `g_k >= -tol`.
pub fn project_inner_feasible(
    p: &[f64],
    x: &[f64],
    game: &Game,
    max_sweeps: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    check_dim("inner point", game.dim_inner(), p.len())?;
    check_dim("outer point", game.dim_outer(), x.len())?;
    let bounds = game.inner_set();
    let mut y = bounds.project(p);
    let mut residual = f64::INFINITY;
    for _ in 0..=max_sweeps {
        residual = game.constraint_violation(x, &y)?;
        if residual <= tol {
            return Ok(y);
        }
        for k in 0..game.num_constraints() {
            let g = game.constraint_value(k, x, &y);
            if g >= 0.0 {
                continue;
            }
            // g(y) + grad . (z - y) >= 0  <=>  (-grad) . z <= g(y) - grad . y
            let grad = game.grad_y_constraint(k, x, &y)?;
            let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
            let offset = g - dot(&grad, &y);
            project_halfspace(&mut y, &neg, offset);
        }
        y = bounds.project(&y);
    }
    Err(Error::ProjectionNotConverged {
        sweeps: max_sweeps,
        residual,
    })
}

/// Euclidean projection onto `{x >= 0 : prices . x <= budget}`.
///
/// The projection is `max(point - tau * prices, 0)` for the smallest
/// `tau >= 0` meeting the budget, found by scanning the sorted breakpoints
/// `point_j / prices_j`.
pub fn project_budget_set(point: &[f64], prices: &[f64], budget: f64) -> Result<Vec<f64>> {
    check_dim("prices", point.len(), prices.len())?;
    if prices.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("budget projection needs positive finite prices".into()));
    }
    if !(budget >= 0.0) {
        return Err(Error::InvalidArgument("budget must be nonnegative".into()));
    }
    let clamped: Vec<f64> = point.iter().map(|v| v.max(0.0)).collect();
    if dot(prices, &clamped) <= budget {
        return Ok(clamped);
    }
    // spend(tau) = sum_{j : z_j > tau p_j} p_j (z_j - tau p_j), decreasing in tau
    let mut breaks: Vec<(f64, usize)> = (0..point.len())
        .filter(|&j| point[j] > 0.0)
        .map(|j| (point[j] / prices[j], j))
        .collect();
    breaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut pz, mut pp) = (0.0, 0.0);
    let mut tau = 0.0;
    for (k, &(t, j)) in breaks.iter().enumerate() {
        pz += prices[j] * point[j];
        pp += prices[j] * prices[j];
        let candidate = (pz - budget) / pp;
        let next = breaks.get(k + 1).map_or(0.0, |b| b.0);
        if candidate >= next && candidate <= t {
            tau = candidate;
            break;
        }
    }
    Ok(point
        .iter()
        .zip(prices)
        .map(|(z, p)| (z - tau * p).max(0.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_outside_point() {
        let b = BoxSet::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(project_box(&[2.0, -3.0], &b).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn inside_point_unchanged() {
        let b = BoxSet::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(project_box(&[0.3, -0.2], &b).unwrap(), vec![0.3, -0.2]);
        let half_line = BoxSet::new(vec![0.0], vec![1e9]).unwrap();
        assert_eq!(project_box(&[0.5], &half_line).unwrap(), vec![0.5]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = BoxSet::cube(2, -1.0, 1.0).unwrap();
        assert!(project_box(&[0.0], &b).is_err());
    }

    #[test]
    fn budget_halfspace_closed_form() {
        // (1,1) - ((2 - 1) / 2) (1,1)
        let x = project_budget_set(&[1.0, 1.0], &[1.0, 1.0], 1.0).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn budget_with_nonnegativity() {
        let x = project_budget_set(&[-1.0, 3.0], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(x, vec![0.0, 1.0]);
        // tau = 1 zeroes the second coordinate: (3 - 2, 0.5 - 1) -> (1, 0)
        let x = project_budget_set(&[3.0, 0.5], &[2.0, 1.0], 2.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1] == 0.0);
    }

    #[test]
    fn feasible_budget_point_unchanged() {
        let x = project_budget_set(&[0.2, 0.3], &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(x, vec![0.2, 0.3]);
    }

    #[test]
    fn budget_projection_beats_random_feasible_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..6.0)).collect();
            let p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..3.0)).collect();
            let b = rng.gen_range(0.5..4.0);
            let x = project_budget_set(&z, &p, b).unwrap();
            assert!(x.iter().all(|v| *v >= 0.0));
            assert!(dot(&p, &x) <= b * (1.0 + 1e-12));
            let d = |w: &[f64]| w.iter().zip(&z).map(|(a, c)| (a - c) * (a - c)).sum::<f64>();
            for _ in 0..50 {
                let mut w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..3.0)).collect();
                let s = dot(&p, &w);
                if s > b {
                    w.iter_mut().for_each(|v| *v *= b / s);
                }
                assert!(d(&x) <= d(&w) + 1e-9);
            }
        }
    }

    #[test]
    fn budget_projection_rejects_zero_price() {
        assert!(project_budget_set(&[1.0], &[0.0], 1.0).is_err());
    }
}
