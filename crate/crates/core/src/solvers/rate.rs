use serde::Serialize;

use super::trajectory::prefix_min;
use super::Trajectory;

/// Least-squares fit of `log(gap_t) = intercept + slope * log(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Set when some gap in the fitted range was not positive (already
    /// converged to the reference); `slope` is then `-inf`.
    pub converged: bool,
}

/// Fits the decay exponent of the best-objective gap
/// `min_{k <= t} objective_k - v_star` over the second half of the run.
pub fn fit_rate(trajectory: &Trajectory, v_star: f64) -> RateFit {
    let gaps: Vec<f64> = prefix_min(&trajectory.objective)
        .into_iter()
        .map(|b| b - v_star)
        .collect();
    fit_power_law(&gaps)
}

/// Fits a power law to `gaps[t - 1]`, `t = 1..=len`, using `t > len / 2`.
pub fn fit_power_law(gaps: &[f64]) -> RateFit {
    let start = gaps.len() / 2;
    let range = &gaps[start..];
    if range.iter().any(|g| !(*g > 0.0)) {
        return RateFit {
            slope: f64::NEG_INFINITY,
            intercept: f64::NAN,
            converged: true,
        };
    }
    let pts: Vec<(f64, f64)> = range
        .iter()
        .enumerate()
        .map(|(i, g)| (((start + i + 1) as f64).ln(), g.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return RateFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            converged: false,
        };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    RateFit {
        slope,
        intercept: my - slope * mx,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_sqrt() {
        let gaps: Vec<f64> = (1..=1000).map(|t| (t as f64).powf(-0.5)).collect();
        let fit = fit_power_law(&gaps);
        assert!((fit.slope + 0.5).abs() < 1e-9);
        assert!(!fit.converged);
    }

    #[test]
    fn exact_inverse_linear() {
        let gaps: Vec<f64> = (1..=1000).map(|t| 3.0 / t as f64).collect();
        let fit = fit_power_law(&gaps);
        assert!((fit.slope + 1.0).abs() < 1e-9);
        assert!((fit.intercept - 3.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn zero_gap_flags_convergence() {
        let gaps = vec![1.0, 0.5, 0.0, 0.0];
        let fit = fit_power_law(&gaps);
        assert!(fit.converged);
        assert_eq!(fit.slope, f64::NEG_INFINITY);
    }
}
