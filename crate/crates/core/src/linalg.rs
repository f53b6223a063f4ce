//! Small dense-vector helpers and a nonnegative least-squares solver.

use nalgebra::{DMatrix, DVector};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solution of a nonnegative least-squares problem.
#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub coefficients: Vec<f64>,
    /// Euclidean norm of `A z - b` at the solution.
    pub residual: f64,
}

/// Solves `min ||A z - b||_2` subject to `z >= 0` with the Lawson-Hanson
/// active-set method.
///
/// `columns` holds the columns of `A`, each of length `b.len()`. An empty
/// column set returns `z = []` with residual `||b||`.
pub fn nnls(columns: &[Vec<f64>], b: &[f64]) -> NnlsSolution {
    let rows = b.len();
    let k = columns.len();
    if k == 0 {
        return NnlsSolution {
            coefficients: Vec::new(),
            residual: norm2(b),
        };
    }
    let a = DMatrix::from_fn(rows, k, |r, c| columns[c][r]);
    let rhs = DVector::from_column_slice(b);
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale * (rows.max(k) as f64);

    let mut z = DVector::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let max_outer = 3 * k + 10;

    for _ in 0..max_outer {
        let w = a.transpose() * (&rhs - &a * &z);
        let candidate = (0..k)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match candidate {
            Some(j) if w[j] > tol => passive[j] = true,
            _ => break,
        }

        // inner loop keeps z feasible while the passive set shrinks
        for _ in 0..=k {
            let s = solve_on_support(&a, &rhs, &passive);
            let infeasible: Vec<usize> = (0..k).filter(|&i| passive[i] && s[i] <= tol).collect();
            if infeasible.is_empty() {
                z = s;
                break;
            }
            let alpha = infeasible
                .iter()
                .map(|&i| z[i] / (z[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            z += (&s - &z) * alpha;
            for i in 0..k {
                if passive[i] && z[i] <= tol {
                    passive[i] = false;
                    z[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }

    for v in z.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let residual = (&a * &z - &rhs).norm();
    NnlsSolution {
        coefficients: z.iter().copied().collect(),
        residual,
    }
}

fn solve_on_support(a: &DMatrix<f64>, rhs: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let mut out = DVector::zeros(passive.len());
    if idx.is_empty() {
        return out;
    }
    let sub = a.select_columns(&idx);
    let svd = sub.svd(true, true);
    let sol = svd
        .solve(rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(idx.len()));
    for (pos, &i) in idx.iter().enumerate() {
        out[i] = sol[pos];
    }
    out
}
