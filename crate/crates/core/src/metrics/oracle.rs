//! Exact expected estimation error by enumerating every possible dataset.
//!
//! Only defined for atomic covariate measures with finitely supported
//! responses. The enumeration runs over ordered samples, so it shares no code
//! path with the fitting routine or the Gram-matrix error evaluation.

use crate::error::{Error, Result};
use crate::partition::{PartitionFamily, PartitionOfUnity};
use crate::problems::RegressionProblem;

use super::NeumaierSum;

/// Largest number of datasets the oracle will enumerate.
pub const ORACLE_BUDGET: u64 = 10_000_000;

/// Exact `E ||Q_M f_rho - f_z||^2` for samples of size `m`.
pub fn exact_expected_error(
    problem: &RegressionProblem,
    family: &PartitionFamily,
    m: usize,
) -> Result<f64> {
    let atoms = problem.measure().atoms().ok_or_else(|| {
        Error::Unsupported(format!(
            "`{}` does not have an atomic marginal",
            problem.name()
        ))
    })?;
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample size m must be at least 1".into(),
        ));
    }
    if family.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: problem.dim(),
        });
    }

    let weights: Vec<Vec<(usize, f64)>> = atoms
        .iter()
        .map(|a| family.weights(&a.point))
        .collect::<Result<_>>()?;
    // (atom, y, probability) for one draw
    let outcomes: Vec<(usize, f64, f64)> = atoms
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            problem
                .response_support(&a.point)
                .into_iter()
                .map(move |(y, p)| (i, y, a.prob * p))
        })
        .collect();

    let terms = (outcomes.len() as f64).powi(m as i32);
    if terms > ORACLE_BUDGET as f64 {
        return Err(Error::BudgetExceeded {
            terms,
            budget: ORACLE_BUDGET,
        });
    }

    let n = family.size();
    let mut alpha = vec![0.0; n];
    let mut rho = vec![0.0; n];
    for (a, w) in atoms.iter().zip(&weights) {
        let f = problem.truth_value(&a.point);
        for &(v, mv) in w {
            alpha[v] += a.prob * f * mv;
            rho[v] += a.prob * mv;
        }
    }
    let population: Vec<f64> = alpha
        .iter()
        .zip(&rho)
        .map(|(&a, &r)| if r > 0.0 { a / r } else { 0.0 })
        .collect();
    let q_at_atoms: Vec<f64> = weights
        .iter()
        .map(|w| w.iter().map(|&(v, mv)| population[v] * mv).sum())
        .collect();

    let mut total = NeumaierSum::default();
    let mut digits = vec![0usize; m];
    let mut response = vec![0.0; n];
    let mut mass = vec![0.0; n];
    loop {
        response.iter_mut().for_each(|s| *s = 0.0);
        mass.iter_mut().for_each(|s| *s = 0.0);
        let mut prob = 1.0;
        for &d in &digits {
            let (atom, y, p) = outcomes[d];
            prob *= p;
            for &(v, mv) in &weights[atom] {
                response[v] += y * mv;
                mass[v] += mv;
            }
        }
        let mut err = 0.0;
        for ((a, w), q) in atoms.iter().zip(&weights).zip(&q_at_atoms) {
            let fz: f64 = w
                .iter()
                .map(|&(v, mv)| {
                    if mass[v] > 0.0 {
                        response[v] / mass[v] * mv
                    } else {
                        0.0
                    }
                })
                .sum();
            err += a.prob * (q - fz) * (q - fz);
        }
        total.add(prob * err);

        // odometer
        let mut i = 0;
        loop {
            if i == m {
                return Ok(total.total());
            }
            digits[i] += 1;
            if digits[i] < outcomes.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{make_dyadic, make_hat};
    use crate::problems::preset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_atom_noiseless_closed_form() {
        // Only the event "every draw lands on the left atom" leaves the right
        // cell empty, costing 0.5 * 1^2; so E = 0.5^(m+1).
        let p = preset("two-atom").unwrap();
        let f = make_dyadic(1, 1).unwrap();
        let e1 = exact_expected_error(&p, &f, 1).unwrap();
        assert_abs_diff_eq!(e1, 0.25, epsilon = 1e-15);
        let e2 = exact_expected_error(&p, &f, 2).unwrap();
        assert!(e2 <= e1);
        for m in 1..=6 {
            let e = exact_expected_error(&p, &f, m).unwrap();
            assert_abs_diff_eq!(e, 0.5f64.powi(m as i32 + 1), epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_truth_is_exactly_zero_when_no_cell_can_be_empty() {
        let p = preset("two-atom-constant").unwrap();
        for m in 1..=5 {
            assert_eq!(
                exact_expected_error(&p, &make_dyadic(1, 0).unwrap(), m).unwrap(),
                0.0
            );
            // both hats are positive at both atoms
            assert_eq!(
                exact_expected_error(&p, &make_hat(1, 2).unwrap(), m).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn constant_truth_pays_for_empty_cells() {
        // A cell is empty with probability 2 * 0.5^m and then costs 0.5 * 0.5^2.
        let p = preset("two-atom-constant").unwrap();
        for m in 1..=5 {
            let e = exact_expected_error(&p, &make_dyadic(1, 1).unwrap(), m).unwrap();
            assert_abs_diff_eq!(e, 2.0 * 0.5f64.powi(m as i32) * 0.125, epsilon = 1e-15);
        }
    }

    #[test]
    fn noisy_single_cell_matches_variance_formula() {
        // One cell: f_z is the sample mean of y; E (mean - E y)^2 = Var(y) / m.
        let p = preset("two-atom-noisy").unwrap();
        let f = make_dyadic(1, 0).unwrap();
        let (p1, p2) = (0.3, 0.7);
        let mean = p1 * -0.25 + p2 * 0.5;
        let second = p1 * (0.0625 + 0.0625) + p2 * (0.25 + 0.0625);
        let var = second - mean * mean;
        for m in 1..=4 {
            let e = exact_expected_error(&p, &f, m).unwrap();
            assert_abs_diff_eq!(e, var / m as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn budget_guard() {
        let p = preset("two-atom-noisy").unwrap();
        let r = exact_expected_error(&p, &make_dyadic(1, 1).unwrap(), 20);
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
        assert!(exact_expected_error(
            &preset("lipschitz-1d").unwrap(),
            &make_dyadic(1, 1).unwrap(),
            2
        )
        .is_err());
    }
}
