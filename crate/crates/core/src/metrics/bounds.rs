//! Closed-form deviation bounds for the cell statistics and the estimator.
//!
//! All probability bounds are clamped to 1.

use crate::error::{Error, Result};

/// Inputs of the Bernstein bounds for a single cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    /// Response bound `A`.
    pub a: f64,
    /// Sample size `m`.
    pub m: u64,
    /// Cell mass `rho_v`.
    pub rho_v: f64,
    /// Deviation `epsilon`.
    pub epsilon: f64,
}

impl BoundInputs {
    fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter(
                "sample size m must be at least 1".into(),
            ));
        }
        if !(self.a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bound A must be positive, got {}",
                self.a
            )));
        }
        if !(0.0..=1.0).contains(&self.rho_v) {
            return Err(Error::InvalidParameter(format!(
                "rho_v must lie in [0, 1], got {}",
                self.rho_v
            )));
        }
        Ok(())
    }
}

fn capped(two_exp_arg: f64) -> f64 {
    (2.0 * (-two_exp_arg).exp()).min(1.0)
}

/// `P(|alpha_v - alpha_v(z)| >= eps) <= 2 exp(-3 m eps^2 / (6 A^2 rho_v + 4 A eps))`.
pub fn bernstein_alpha_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.check()?;
    let BoundInputs {
        a,
        m,
        rho_v,
        epsilon,
    } = *inputs;
    let exponent = 3.0 * m as f64 * epsilon * epsilon / (6.0 * a * a * rho_v + 4.0 * a * epsilon);
    Ok(capped(exponent))
}

/// `P(|rho_v - rho_v(z)| >= eps) <= 2 exp(-3 m eps^2 / (6 rho_v + 2 eps))`.
pub fn bernstein_rho_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.check()?;
    let BoundInputs {
        m, rho_v, epsilon, ..
    } = *inputs;
    let exponent = 3.0 * m as f64 * epsilon * epsilon / (6.0 * rho_v + 2.0 * epsilon);
    Ok(capped(exponent))
}

/// The constant `c = 3 / (128 A^2)` of the tail bound.
pub fn tail_constant(a: f64) -> f64 {
    3.0 / (128.0 * a * a)
}

/// `P(||Q_M f - f_z|| > eta) <= 4 N exp(-c m eta^2 / N)`.
pub fn tail_bound(eta: f64, m: u64, n: usize, a: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be positive, got {eta}"
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("m and N must be at least 1".into()));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bound A must be positive, got {a}"
        )));
    }
    let n = n as f64;
    Ok((4.0 * n * (-tail_constant(a) * m as f64 * eta * eta / n).exp()).min(1.0))
}

/// `(A^2 rho_v, rho_v)`: upper bounds on `Var(y M_v(x))` and `Var(M_v(x))`.
pub fn variance_bounds(rho_v: f64, a: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&rho_v) {
        return Err(Error::InvalidParameter(format!(
            "rho_v must lie in [0, 1], got {rho_v}"
        )));
    }
    Ok((a * a * rho_v, rho_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn inputs(a: f64, m: u64, rho_v: f64, epsilon: f64) -> BoundInputs {
        BoundInputs {
            a,
            m,
            rho_v,
            epsilon,
        }
    }

    #[test]
    fn alpha_bound_by_hand() {
        // 3 * 10 * 1 / (6 + 4) = 3
        let b = bernstein_alpha_bound(&inputs(1.0, 10, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(b, 2.0 * (-3.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn alpha_bound_limits() {
        let mut last = 1.0;
        for eps in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0] {
            let b = bernstein_alpha_bound(&inputs(1.0, 50, 0.3, eps)).unwrap();
            assert!(b <= last && b <= 1.0);
            last = b;
        }
        assert!(last < 1e-100);
        assert!(bernstein_alpha_bound(&inputs(1.0, 50, 0.3, 0.0)).is_err());
        assert!(bernstein_alpha_bound(&inputs(1.0, 50, 0.3, -1.0)).is_err());
    }

    #[test]
    fn rho_bound_by_hand() {
        // 3 * 8 / (6 + 2) = 3
        let b = bernstein_rho_bound(&inputs(1.0, 8, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(b, 2.0 * (-3.0f64).exp(), epsilon = 1e-15);
        // rho_v = 0: exponent 3 m eps / 2
        let b = bernstein_rho_bound(&inputs(1.0, 4, 0.0, 1.5)).unwrap();
        assert_abs_diff_eq!(b, 2.0 * (-9.0f64).exp(), epsilon = 1e-15);
        assert_eq!(
            bernstein_rho_bound(&inputs(1.0, 1, 0.5, 1e-6)).unwrap(),
            1.0
        );
        assert!(bernstein_rho_bound(&inputs(1.0, 0, 0.5, 0.1)).is_err());
    }

    #[test]
    fn tail_bound_by_hand() {
        assert_eq!(tail_constant(1.0), 3.0 / 128.0);
        let b = tail_bound(1.0, 128, 1, 1.0).unwrap();
        assert_abs_diff_eq!(b, 4.0 * (-3.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.19915, epsilon = 5e-6);
        assert_eq!(tail_bound(1e-9, 1, 1, 1.0).unwrap(), 1.0);
        assert!(tail_bound(0.0, 1, 1, 1.0).is_err());
    }

    #[test]
    fn tail_bound_monotonicity() {
        // 64 exp(-6) at the base point
        let base = tail_bound(1.0, 4096, 16, 1.0).unwrap();
        assert!(base < 1.0);
        assert!(tail_bound(1.0, 8192, 16, 1.0).unwrap() < base);
        assert!(tail_bound(1.1, 4096, 16, 1.0).unwrap() < base);
        assert!(tail_bound(1.0, 4096, 20, 1.0).unwrap() > base);
        assert!(tail_bound(1.0, 4096, 16, 1.1).unwrap() > base);
    }

    #[test]
    fn variance_bounds_by_hand() {
        assert_eq!(variance_bounds(0.0, 3.0).unwrap(), (0.0, 0.0));
        assert_eq!(variance_bounds(0.5, 2.0).unwrap(), (2.0, 0.5));
        assert_eq!(variance_bounds(1.0, 1.0).unwrap(), (1.0, 1.0));
        assert!(variance_bounds(1.5, 1.0).is_err());
    }
}
