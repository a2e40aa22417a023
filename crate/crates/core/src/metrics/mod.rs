//! `L2(rho_X)` distances, replicated error estimates and deviation bounds.

mod bounds;
mod oracle;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{fit, EstimatorCoeffs, PopulationModel};
use crate::function::{DyadicAffine, Evaluable};
use crate::partition::PartitionFamily;
use crate::problems::{sample_dataset_stream, Dataset, MarginalMeasure, RegressionProblem};
use crate::rng::{replicate, stream_rng, DISTANCE_STREAM};

pub use bounds::{
    bernstein_alpha_bound, bernstein_rho_bound, tail_bound, tail_constant, variance_bounds,
    BoundInputs,
};
pub use oracle::{exact_expected_error, ORACLE_BUDGET};

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// Mean and standard error of a sample, aggregated in index order.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().copied().collect::<NeumaierSum>().total() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<NeumaierSum>()
        .total();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Estimate of `∫ (f - g)^2 d rho_X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Estimate {
    pub value: f64,
    pub std_err: f64,
    /// True when computed by exact summation or integration.
    pub exact: bool,
    pub points: usize,
}

/// Squared `L2(rho_X)` distance between `f` and `g`.
///
/// Exact for atomic measures (finite sum) and for pairs of dyadic piecewise
/// affine functions under the uniform measure; otherwise Monte Carlo with
/// `n_mc` points on a dedicated stream of `seed`.
pub fn l2_sq_distance(
    f: &dyn Evaluable,
    g: &dyn Evaluable,
    measure: &MarginalMeasure,
    n_mc: usize,
    seed: u64,
) -> Result<L2Estimate> {
    let dim = measure.dim();
    if f.dim() != dim || g.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: f.dim().max(g.dim()),
        });
    }
    if let Some(atoms) = measure.atoms() {
        let value = atoms
            .iter()
            .map(|a| {
                let d = f.eval(&a.point) - g.eval(&a.point);
                a.prob * d * d
            })
            .collect::<NeumaierSum>()
            .total();
        return Ok(L2Estimate {
            value,
            std_err: 0.0,
            exact: true,
            points: atoms.len(),
        });
    }
    if let MarginalMeasure::Uniform { .. } = measure {
        if let (Some(a), Some(b)) = (f.dyadic_affine(), g.dyadic_affine()) {
            let level = a.level.max(b.level);
            if let Some(cells) = DyadicAffine::cells_at(dim, level) {
                let value = a.uniform_sq_distance(&b);
                return Ok(L2Estimate {
                    value,
                    std_err: 0.0,
                    exact: true,
                    points: cells,
                });
            }
        }
    }
    if n_mc < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_mc must be at least 2, got {n_mc}"
        )));
    }
    let mut rng = stream_rng(seed, DISTANCE_STREAM);
    let mut x = vec![0.0; dim];
    let sq: Vec<f64> = (0..n_mc)
        .map(|_| {
            measure.sample_into(&mut rng, &mut x);
            let d = f.eval(&x) - g.eval(&x);
            d * d
        })
        .collect();
    let (value, std_err) = mean_and_std_err(&sq);
    Ok(L2Estimate {
        value,
        std_err,
        exact: false,
        points: n_mc,
    })
}

/// `||f - Q_M f||` in `L2(rho_X)`.
pub fn approx_error(
    f: &dyn Evaluable,
    family: &PartitionFamily,
    measure: &MarginalMeasure,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    let population = PopulationModel::compute(f, family, measure, n_mc.max(1), seed)?;
    let q = population.to_coeffs(f64::INFINITY);
    Ok(l2_sq_distance(f, &q, measure, n_mc, seed)?.value.sqrt())
}

/// Replicated estimate of an expected squared error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub mean_sq: f64,
    pub std_err: f64,
    pub replications: usize,
    /// Quadrature points behind the population step (0 when exact).
    pub mc_points: usize,
}

/// Which error a replication is scored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// `||Q_M f_rho - f_z||^2`.
    Estimation,
    /// `||f_rho - f_z||^2`.
    Total,
}

/// Runs `score(dataset, fitted)` on `replications` independent datasets of
/// size `m`; replication `r` samples from stream `r` of `seed`.
pub fn per_replication<T, F>(
    problem: &RegressionProblem,
    family: &PartitionFamily,
    m: usize,
    replications: usize,
    seed: u64,
    score: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Dataset, &EstimatorCoeffs) -> T + Sync,
{
    if family.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: family.dim(),
        });
    }
    replicate(replications, seed, |r, rng: &mut ChaCha8Rng| {
        let data = sample_dataset_stream(problem, m, seed, r, rng)?;
        let fitted = fit(&data, family, problem.bound_a())?;
        Ok(score(&data, &fitted))
    })
    .into_iter()
    .collect()
}

/// Replicated `E ||Q_M f_rho - f_z||^2` (or `E ||f_rho - f_z||^2`) against a
/// precomputed population model.
pub fn estimate_with_model(
    problem: &RegressionProblem,
    model: &PopulationModel,
    m: usize,
    replications: usize,
    mc_points: usize,
    seed: u64,
    kind: ErrorKind,
) -> Result<ErrorEstimate> {
    if replications < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    let errors = per_replication(
        problem,
        &model.family,
        m,
        replications,
        seed,
        |_, fitted| match kind {
            ErrorKind::Estimation => model.estimation_sq_error(fitted.coeffs()),
            ErrorKind::Total => model.total_sq_error(fitted.coeffs()),
        },
    )?;
    let (mean_sq, se) = mean_and_std_err(&errors);
    // Quadrature error in Q_M f shifts the squared norm by at most
    // 2 sqrt(mean * q) + q in expectation.
    let q = model.quadrature_var;
    let mut systematic = 2.0 * (mean_sq * q).sqrt() + q;
    if kind == ErrorKind::Total {
        systematic += model.approx_sq_se;
    }
    Ok(ErrorEstimate {
        mean_sq,
        std_err: (se * se + systematic * systematic).sqrt(),
        replications,
        mc_points: if model.exact { 0 } else { mc_points },
    })
}

/// Replicated estimate of `E ||Q_M f_rho - f_z||^2`.
pub fn estimate_expected_error(
    problem: &RegressionProblem,
    family: &PartitionFamily,
    m: usize,
    replications: usize,
    mc_points: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    let model =
        PopulationModel::compute(problem.truth(), family, problem.measure(), mc_points, seed)?;
    estimate_with_model(
        problem,
        &model,
        m,
        replications,
        mc_points,
        seed,
        ErrorKind::Estimation,
    )
}

/// Replicated estimate of `E ||f_rho - f_z||^2`.
pub fn estimate_expected_total_error(
    problem: &RegressionProblem,
    family: &PartitionFamily,
    m: usize,
    replications: usize,
    mc_points: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    let model =
        PopulationModel::compute(problem.truth(), family, problem.measure(), mc_points, seed)?;
    estimate_with_model(
        problem,
        &model,
        m,
        replications,
        mc_points,
        seed,
        ErrorKind::Total,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{FnEval, Target};
    use crate::partition::{make_dyadic, make_hat};
    use crate::problems::preset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distance_to_self_is_zero() {
        let f = FnEval::new(2, |x: &[f64]| (x[0] * 3.0).sin() + x[1]);
        let d = l2_sq_distance(&f, &f, &MarginalMeasure::Uniform { dim: 2 }, 1000, 1).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.std_err, 0.0);
    }

    #[test]
    fn identity_against_zero() {
        let x = Target::affine(0.0, vec![1.0]);
        let zero = Target::constant(1, 0.0);
        let u = MarginalMeasure::Uniform { dim: 1 };
        let exact = l2_sq_distance(&x, &zero, &u, 10, 0).unwrap();
        assert!(exact.exact);
        assert_abs_diff_eq!(exact.value, 1.0 / 3.0, epsilon = 1e-15);
        let opaque = FnEval::new(1, |x: &[f64]| x[0]);
        let mc = l2_sq_distance(&opaque, &zero, &u, 200_000, 4).unwrap();
        assert!(!mc.exact);
        assert!((mc.value - 1.0 / 3.0).abs() < 4.0 * mc.std_err);
    }

    #[test]
    fn atomic_distance_is_a_finite_sum() {
        let m = MarginalMeasure::atomic(vec![(vec![0.25], 0.5), (vec![0.75], 0.5)]).unwrap();
        let f = FnEval::new(1, |x: &[f64]| if x[0] < 0.5 { 1.0 } else { -1.0 });
        let zero = Target::constant(1, 0.0);
        let d = l2_sq_distance(&f, &zero, &m, 2, 0).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(d.exact);
    }

    #[test]
    fn distance_is_symmetric() {
        let f = FnEval::new(1, |x: &[f64]| x[0] * x[0]);
        let g = FnEval::new(1, |x: &[f64]| 0.3 - x[0]);
        let m = MarginalMeasure::product_beta(1, 2.0, 5.0).unwrap();
        let a = l2_sq_distance(&f, &g, &m, 5000, 8).unwrap();
        let b = l2_sq_distance(&g, &f, &m, 5000, 8).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn approx_error_of_identity_halves_per_level() {
        let f = Target::affine(0.0, vec![1.0]);
        let u = MarginalMeasure::Uniform { dim: 1 };
        for level in 0..8u32 {
            let e = approx_error(&f, &make_dyadic(1, level).unwrap(), &u, 10, 0).unwrap();
            let n = (1u64 << level) as f64;
            assert_abs_diff_eq!(e, 1.0 / (n * 12f64.sqrt()), epsilon = 1e-12);
        }
    }

    #[test]
    fn approx_error_zero_for_constants() {
        let k = Target::constant(1, 0.4);
        let u = MarginalMeasure::Uniform { dim: 1 };
        assert_eq!(
            approx_error(&k, &make_dyadic(1, 3).unwrap(), &u, 10, 0).unwrap(),
            0.0
        );
        let e = approx_error(&k, &make_hat(1, 5).unwrap(), &u, 20_000, 0).unwrap();
        assert!(e < 1e-12, "{e}");
    }

    #[test]
    fn noiseless_constant_problem_has_zero_error() {
        let p = preset("constant-1d").unwrap();
        let e = estimate_expected_error(&p, &make_dyadic(1, 2).unwrap(), 64, 50, 1000, 3).unwrap();
        assert_eq!(e.mean_sq, 0.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn estimates_are_reproducible() {
        let p = preset("lipschitz-1d").unwrap();
        let f = make_dyadic(1, 3).unwrap();
        let a = estimate_expected_error(&p, &f, 128, 64, 1000, 5).unwrap();
        let b = estimate_expected_error(&p, &f, 128, 64, 1000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.mean_sq > 0.0);
        assert!(estimate_expected_error(&p, &f, 128, 1, 1000, 5).is_err());
    }

    #[test]
    fn total_error_exceeds_estimation_error_by_the_bias() {
        let p = preset("lipschitz-1d").unwrap();
        let f = make_dyadic(1, 2).unwrap();
        let est = estimate_expected_error(&p, &f, 256, 400, 1000, 2).unwrap();
        let tot = estimate_expected_total_error(&p, &f, 256, 400, 1000, 2).unwrap();
        // Same datasets, and indicator families are orthogonal: exact shift.
        assert_abs_diff_eq!(
            tot.mean_sq - est.mean_sq,
            1.0 / (16.0 * 12.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn matches_the_oracle_on_small_instances() {
        let p = preset("two-atom").unwrap();
        let f = make_dyadic(1, 1).unwrap();
        for m in 1..=3 {
            let exact = exact_expected_error(&p, &f, m).unwrap();
            let est = estimate_expected_error(&p, &f, m, 4000, 10, 17).unwrap();
            assert!(
                (est.mean_sq - exact).abs() <= 4.0 * est.std_err,
                "m={m}: {est:?} vs {exact}"
            );
        }
    }
}
