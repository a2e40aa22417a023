//! Least-squares rate fits.

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Straight-line fit `y = intercept + slope * x` over transformed points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// In `[0, 1]`; 1 when the responses are constant.
    pub r_squared: f64,
    /// Transformed points `(x, y)` the line was fitted to.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares of `log y` on `log x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> CliResult<RateFit> {
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(CliError::Fit(format!(
            "log-log fit needs positive coordinates, got ({x}, {y})"
        )));
    }
    fit_line(points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect())
}

/// Ordinary least squares of `log y` on `x`.
pub fn fit_semilog(points: &[(f64, f64)]) -> CliResult<RateFit> {
    if let Some(&(_, y)) = points.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(CliError::Fit(format!(
            "semi-log fit needs positive responses, got {y}"
        )));
    }
    fit_line(points.iter().map(|&(x, y)| (x, y.ln())).collect())
}

fn fit_line(points: Vec<(f64, f64)>) -> CliResult<RateFit> {
    if points.len() < 3 {
        return Err(CliError::Fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(CliError::Fit("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_has_unit_slope() {
        let f = fit_loglog(&[(1.0, 1.0), (2.0, 2.0), (5.0, 5.0), (9.0, 9.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&x: &f64| (x, 7.0 * x.powf(-2.0 / 3.0)))
            .collect();
        let f = fit_loglog(&pts).unwrap();
        assert_abs_diff_eq!(f.slope, -2.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.intercept, 7.0f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn constant_response() {
        let f = fit_loglog(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_loglog(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
        assert!(fit_loglog(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn semilog_recovers_exponential() {
        let pts: Vec<_> = (1..6)
            .map(|k| (k as f64, 3.0 * (-0.5 * k as f64).exp()))
            .collect();
        let f = fit_semilog(&pts).unwrap();
        assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }
}
