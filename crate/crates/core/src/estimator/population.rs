//! Population quantities `alpha_v`, `rho_v`, `c_v` and the Gram matrix of the
//! family under `rho_X`.
//!
//! Three routes, tried in order:
//!
//! 1. atomic measures: exact finite sums over the atoms;
//! 2. dyadic families under uniform or product-beta measures with a target
//!    that is affine on every cell: closed-form cell moments;
//! 3. everything else: seeded Monte Carlo quadrature, whose own noise is
//!    estimated and reported in [`PopulationModel::quadrature_var`].

use std::collections::HashMap;

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::function::{DyadicAffine, Evaluable};
use crate::metrics::NeumaierSum;
use crate::partition::PartitionFamily;
use crate::problems::MarginalMeasure;
use crate::rng::{stream_rng, POPULATION_STREAM};

use super::{CoeffKind, EstimatorCoeffs};

pub const DEFAULT_QUADRATURE: usize = 1_000_000;

/// Sparse symmetric matrix `G_uv = ∫ M_u M_v d rho_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub diag: Vec<f64>,
    /// Strictly upper entries `(u, v, G_uv)` with `u < v`.
    pub upper: Vec<(usize, usize, f64)>,
}

impl Gram {
    /// `d^T G d`, i.e. `||sum_v d_v M_v||^2` in `L2(rho_X)`.
    pub fn quad_form(&self, d: &[f64]) -> f64 {
        let diag: f64 = self.diag.iter().zip(d).map(|(g, x)| g * x * x).sum();
        let off: f64 = self.upper.iter().map(|&(u, v, g)| g * d[u] * d[v]).sum();
        (diag + 2.0 * off).max(0.0)
    }

    fn from_pairs(diag: Vec<f64>, pairs: HashMap<(usize, usize), f64>) -> Self {
        let mut upper: Vec<_> = pairs.into_iter().map(|((u, v), g)| (u, v, g)).collect();
        upper.sort_by_key(|&(u, v, _)| (u, v));
        Self { diag, upper }
    }
}

/// Everything about `Q_M f_rho` needed to score fitted estimators.
#[derive(Debug, Clone)]
pub struct PopulationModel {
    pub family: PartitionFamily,
    pub alpha: Vec<f64>,
    pub rho: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub gram: Gram,
    /// `||f - Q_M f||^2`.
    pub approx_sq: f64,
    /// `b_v = ∫ (f - Q_M f) M_v d rho_X`; zero for indicator families.
    pub cross: Vec<f64>,
    /// Expected squared-norm perturbation of `Q_M f` caused by quadrature
    /// noise, `sum_v rho_v Var(c_v)`; zero on the exact routes.
    pub quadrature_var: f64,
    /// Standard error of `approx_sq`; zero on the exact routes.
    pub approx_sq_se: f64,
    pub exact: bool,
}

impl PopulationModel {
    pub fn compute(
        truth: &dyn Evaluable,
        family: &PartitionFamily,
        measure: &MarginalMeasure,
        quadrature_n: usize,
        seed: u64,
    ) -> Result<Self> {
        if truth.dim() != family.dim() || measure.dim() != family.dim() {
            return Err(Error::DimensionMismatch {
                expected: family.dim(),
                got: measure.dim(),
            });
        }
        if quadrature_n == 0 {
            return Err(Error::InvalidParameter(
                "quadrature_n must be at least 1".into(),
            ));
        }
        if let Some(atoms) = measure.atoms() {
            return Ok(Self::atomic(truth, family, atoms));
        }
        if let Some(model) = Self::dyadic_closed_form(truth, family, measure) {
            return Ok(model);
        }
        Ok(Self::monte_carlo(
            truth,
            family,
            measure,
            quadrature_n,
            seed,
        ))
    }

    /// `||Q_M f - sum_v c_v M_v||^2` for coefficients in the same family.
    pub fn estimation_sq_error(&self, coeffs: &[f64]) -> f64 {
        let d: Vec<f64> = self.coeffs.iter().zip(coeffs).map(|(a, b)| a - b).collect();
        self.gram.quad_form(&d)
    }

    /// `||f - sum_v c_v M_v||^2`, expanded as
    /// `||f - Qf||^2 + 2 b.d + d^T G d` with `d = c(f) - c`.
    pub fn total_sq_error(&self, coeffs: &[f64]) -> f64 {
        let d: Vec<f64> = self.coeffs.iter().zip(coeffs).map(|(a, b)| a - b).collect();
        let cross: f64 = self.cross.iter().zip(&d).map(|(b, x)| b * x).sum();
        (self.approx_sq + 2.0 * cross + self.gram.quad_form(&d)).max(0.0)
    }

    pub fn to_coeffs(&self, bound_a: f64) -> EstimatorCoeffs {
        EstimatorCoeffs {
            family: self.family,
            coeffs: self.coeffs.clone(),
            rho: self.rho.clone(),
            bound_a,
            kind: CoeffKind::Population,
        }
    }

    fn ratio(alpha: &[f64], rho: &[f64]) -> Vec<f64> {
        alpha
            .iter()
            .zip(rho)
            .map(|(&a, &r)| if r > 0.0 { a / r } else { 0.0 })
            .collect()
    }

    fn atomic(
        truth: &dyn Evaluable,
        family: &PartitionFamily,
        atoms: &[crate::problems::Atom],
    ) -> Self {
        let n = family.size();
        let mut alpha = vec![0.0; n];
        let mut rho = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut pairs = HashMap::new();
        let mut w = Vec::new();
        for atom in atoms {
            family.weights_unchecked(&atom.point, &mut w);
            let f = truth.eval(&atom.point);
            accumulate(
                &w, atom.prob, f, &mut alpha, &mut rho, &mut diag, &mut pairs,
            );
        }
        let coeffs = Self::ratio(&alpha, &rho);
        let mut approx = NeumaierSum::default();
        let mut cross = vec![0.0; n];
        for atom in atoms {
            family.weights_unchecked(&atom.point, &mut w);
            let resid =
                truth.eval(&atom.point) - w.iter().map(|&(v, m)| coeffs[v] * m).sum::<f64>();
            approx.add(atom.prob * resid * resid);
            for &(v, m) in &w {
                cross[v] += atom.prob * resid * m;
            }
        }
        Self {
            family: *family,
            alpha,
            rho,
            coeffs,
            gram: Gram::from_pairs(diag, pairs),
            approx_sq: approx.total().max(0.0),
            cross,
            quadrature_var: 0.0,
            approx_sq_se: 0.0,
            exact: true,
        }
    }

    fn dyadic_closed_form(
        truth: &dyn Evaluable,
        family: &PartitionFamily,
        measure: &MarginalMeasure,
    ) -> Option<Self> {
        let cells = family.dyadic_cells_per_axis()?;
        let moments = match measure {
            MarginalMeasure::Uniform { .. } => AxisMoments::uniform(cells),
            MarginalMeasure::ProductBeta { a, b, .. } => AxisMoments::beta(cells, *a, *b),
            MarginalMeasure::AtomicDiscrete { .. } => return None,
        };
        let pieces = truth.dyadic_affine()?;
        let level = match family.kind() {
            crate::partition::FamilyKind::DyadicIndicator { level } => level,
            _ => return None,
        };
        if pieces.level > level || DyadicAffine::cells_at(family.dim(), level).is_none() {
            return None;
        }
        let pieces = pieces.refine(level);
        let n = family.size();
        let h = 1.0 / cells as f64;
        let mut alpha = vec![0.0; n];
        let mut rho = vec![0.0; n];
        let mut coeffs = vec![0.0; n];
        let mut approx = NeumaierSum::default();
        for v in 0..n {
            let idx = family.multi_index(v);
            let mass: f64 = idx.iter().map(|&j| moments.mass[j]).product();
            rho[v] = mass;
            if mass <= 0.0 {
                continue;
            }
            let piece = &pieces.pieces[v];
            let mut c = piece.center_value;
            let mut spread = 0.0;
            for (&j, g) in idx.iter().zip(&piece.gradient) {
                let center = (j as f64 + 0.5) * h;
                c += g * (moments.mean[j] - center);
                spread += g * g * moments.var[j];
            }
            coeffs[v] = c;
            alpha[v] = c * mass;
            approx.add(mass * spread);
        }
        Some(Self {
            family: *family,
            alpha,
            gram: Gram {
                diag: rho.clone(),
                upper: Vec::new(),
            },
            rho,
            coeffs,
            approx_sq: approx.total().max(0.0),
            cross: vec![0.0; n],
            quadrature_var: 0.0,
            approx_sq_se: 0.0,
            exact: true,
        })
    }

    fn monte_carlo(
        truth: &dyn Evaluable,
        family: &PartitionFamily,
        measure: &MarginalMeasure,
        quadrature_n: usize,
        seed: u64,
    ) -> Self {
        let n = family.size();
        let dim = family.dim();
        let mut x = vec![0.0; dim];
        let mut w = Vec::new();

        let mut alpha = vec![0.0; n];
        let mut rho = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut pairs = HashMap::new();
        let mut rng = stream_rng(seed, POPULATION_STREAM);
        for _ in 0..quadrature_n {
            measure.sample_into(&mut rng, &mut x);
            family.weights_unchecked(&x, &mut w);
            accumulate(
                &w,
                1.0,
                truth.eval(&x),
                &mut alpha,
                &mut rho,
                &mut diag,
                &mut pairs,
            );
        }
        let q = quadrature_n as f64;
        for v in alpha
            .iter_mut()
            .chain(rho.iter_mut())
            .chain(diag.iter_mut())
        {
            *v /= q;
        }
        pairs.values_mut().for_each(|g| *g /= q);
        let coeffs = Self::ratio(&alpha, &rho);

        // Second pass over the same points for residual quantities.
        let mut rng = stream_rng(seed, POPULATION_STREAM);
        let mut approx = NeumaierSum::default();
        let mut approx_sq2 = NeumaierSum::default();
        let mut cross = vec![0.0; n];
        let mut spread = vec![0.0; n];
        for _ in 0..quadrature_n {
            measure.sample_into(&mut rng, &mut x);
            family.weights_unchecked(&x, &mut w);
            let f = truth.eval(&x);
            let resid = f - w.iter().map(|&(v, m)| coeffs[v] * m).sum::<f64>();
            approx.add(resid * resid);
            approx_sq2.add(resid.powi(4));
            for &(v, m) in &w {
                cross[v] += resid * m;
                let e = m * (f - coeffs[v]);
                spread[v] += e * e;
            }
        }
        cross.iter_mut().for_each(|b| *b /= q);
        let approx_sq = approx.total() / q;
        let second = approx_sq2.total() / q;
        let approx_sq_se = if quadrature_n > 1 {
            ((second - approx_sq * approx_sq).max(0.0) / (q - 1.0)).sqrt()
        } else {
            0.0
        };
        // Delta method: Var(c_v) ~ E[M_v^2 (f - c_v)^2] / (n rho_v^2).
        let quadrature_var = spread
            .iter()
            .zip(&rho)
            .filter(|(_, &r)| r > 0.0)
            .map(|(&s, &r)| r * (s / q) / (q * r * r))
            .sum();
        Self {
            family: *family,
            alpha,
            rho,
            coeffs,
            gram: Gram::from_pairs(diag, pairs),
            approx_sq: approx_sq.max(0.0),
            cross,
            quadrature_var,
            approx_sq_se,
            exact: false,
        }
    }
}

fn accumulate(
    w: &[(usize, f64)],
    prob: f64,
    f: f64,
    alpha: &mut [f64],
    rho: &mut [f64],
    diag: &mut [f64],
    pairs: &mut HashMap<(usize, usize), f64>,
) {
    for (i, &(u, mu)) in w.iter().enumerate() {
        alpha[u] += prob * f * mu;
        rho[u] += prob * mu;
        diag[u] += prob * mu * mu;
        for &(v, mv) in &w[i + 1..] {
            let key = if u < v { (u, v) } else { (v, u) };
            *pairs.entry(key).or_insert(0.0) += prob * mu * mv;
        }
    }
}

/// Per-axis cell masses, conditional means and conditional variances.
struct AxisMoments {
    mass: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl AxisMoments {
    fn uniform(cells: usize) -> Self {
        let h = 1.0 / cells as f64;
        Self {
            mass: vec![h; cells],
            mean: (0..cells).map(|j| (j as f64 + 0.5) * h).collect(),
            var: vec![h * h / 12.0; cells],
        }
    }

    /// Cell moments of `Beta(a, b)` from the regularized incomplete beta
    /// function: `E[x 1_I] = a/(a+b) * P_{a+1,b}(I)` and
    /// `E[x^2 1_I] = a(a+1)/((a+b)(a+b+1)) * P_{a+2,b}(I)`.
    fn beta(cells: usize, a: f64, b: f64) -> Self {
        let h = 1.0 / cells as f64;
        let prob = |p: f64, j: usize| {
            let lo = j as f64 * h;
            let hi = if j + 1 == cells {
                1.0
            } else {
                (j + 1) as f64 * h
            };
            beta_reg(p, b, hi) - beta_reg(p, b, lo)
        };
        let k1 = a / (a + b);
        let k2 = a * (a + 1.0) / ((a + b) * (a + b + 1.0));
        let mut mass = Vec::with_capacity(cells);
        let mut mean = Vec::with_capacity(cells);
        let mut var = Vec::with_capacity(cells);
        for j in 0..cells {
            let p0 = prob(a, j).max(0.0);
            mass.push(p0);
            if p0 > 0.0 {
                let m1 = k1 * prob(a + 1.0, j) / p0;
                let m2 = k2 * prob(a + 2.0, j) / p0;
                let center = (j as f64 + 0.5) * h;
                mean.push(m1.clamp(center - 0.5 * h, center + 0.5 * h));
                var.push((m2 - m1 * m1).clamp(0.0, h * h / 4.0));
            } else {
                mean.push((j as f64 + 0.5) * h);
                var.push(0.0);
            }
        }
        Self { mass, mean, var }
    }
}

/// Population coefficients `c_v(f) = alpha_v(f) / rho_v`, zero where
/// `rho_v = 0`.
pub fn population_coeffs(
    truth: &dyn Evaluable,
    family: &PartitionFamily,
    measure: &MarginalMeasure,
    quadrature_n: usize,
    seed: u64,
    bound_a: f64,
) -> Result<EstimatorCoeffs> {
    Ok(PopulationModel::compute(truth, family, measure, quadrature_n, seed)?.to_coeffs(bound_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{FnEval, Target};
    use crate::partition::{make_dyadic, make_hat};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants_are_reproduced() {
        let k = Target::constant(1, 0.3);
        for family in [make_dyadic(1, 3).unwrap(), make_hat(1, 5).unwrap()] {
            let c = population_coeffs(
                &k,
                &family,
                &MarginalMeasure::Uniform { dim: 1 },
                20_000,
                1,
                1.0,
            )
            .unwrap();
            for &v in c.coeffs() {
                assert_abs_diff_eq!(v, 0.3, epsilon = 1e-12);
            }
        }
        let k2 = FnEval::new(2, |_| -0.4);
        let c = population_coeffs(
            &k2,
            &make_hat(2, 3).unwrap(),
            &MarginalMeasure::Uniform { dim: 2 },
            20_000,
            1,
            1.0,
        )
        .unwrap();
        assert!(c.coeffs().iter().all(|v| (v + 0.4).abs() < 1e-12));
    }

    #[test]
    fn identity_cell_averages() {
        let f = Target::affine(0.0, vec![1.0]);
        let m = PopulationModel::compute(
            &f,
            &make_dyadic(1, 1).unwrap(),
            &MarginalMeasure::Uniform { dim: 1 },
            10,
            0,
        )
        .unwrap();
        assert!(m.exact);
        assert_eq!(m.coeffs, vec![0.25, 0.75]);
        assert_eq!(m.rho, vec![0.5, 0.5]);
        assert_abs_diff_eq!(m.approx_sq, 1.0 / 48.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_population_cell_gets_zero() {
        let measure = MarginalMeasure::atomic(vec![(vec![0.1], 0.4), (vec![0.3], 0.6)]).unwrap();
        let f = Target::affine(0.5, vec![1.0]);
        let m = PopulationModel::compute(&f, &make_dyadic(1, 1).unwrap(), &measure, 10, 0).unwrap();
        assert_eq!(m.rho[1], 0.0);
        assert_eq!(m.coeffs[1], 0.0);
        assert_abs_diff_eq!(m.coeffs[0], 0.5 + 0.4 * 0.1 + 0.6 * 0.3, epsilon = 1e-15);
    }

    #[test]
    fn two_atom_step_is_reproduced() {
        let p = crate::problems::preset("two-atom").unwrap();
        let m =
            PopulationModel::compute(p.truth(), &make_dyadic(1, 1).unwrap(), p.measure(), 10, 0)
                .unwrap();
        assert_eq!(m.coeffs, vec![0.0, 1.0]);
        assert_eq!(m.approx_sq, 0.0);
    }

    #[test]
    fn beta_closed_form_matches_quadrature() {
        let measure = MarginalMeasure::product_beta(1, 2.0, 5.0).unwrap();
        let family = make_dyadic(1, 2).unwrap();
        let f = Target::affine(-0.5, vec![1.0]);
        let exact = PopulationModel::compute(&f, &family, &measure, 10, 0).unwrap();
        assert!(exact.exact);
        let sum: f64 = exact.rho.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        // Same target, but hidden behind an opaque closure.
        let opaque = FnEval::new(1, |x: &[f64]| x[0] - 0.5);
        let mc = PopulationModel::compute(&opaque, &family, &measure, 400_000, 3).unwrap();
        assert!(!mc.exact);
        for v in 0..4 {
            assert_abs_diff_eq!(exact.rho[v], mc.rho[v], epsilon = 5e-3);
            if exact.rho[v] > 0.01 {
                assert_abs_diff_eq!(exact.coeffs[v], mc.coeffs[v], epsilon = 5e-3);
            }
        }
        assert_abs_diff_eq!(
            exact.approx_sq,
            mc.approx_sq,
            epsilon = 5.0 * mc.approx_sq_se + 1e-6
        );
    }

    #[test]
    fn hat_gram_under_uniform() {
        // Two hats 1-x and x: G = [[1/3, 1/6], [1/6, 1/3]].
        let one = FnEval::new(1, |_| 1.0);
        let m = PopulationModel::compute(
            &one,
            &make_hat(1, 2).unwrap(),
            &MarginalMeasure::Uniform { dim: 1 },
            400_000,
            9,
        )
        .unwrap();
        assert_abs_diff_eq!(m.gram.diag[0], 1.0 / 3.0, epsilon = 3e-3);
        assert_abs_diff_eq!(m.gram.diag[1], 1.0 / 3.0, epsilon = 3e-3);
        assert_eq!(m.gram.upper.len(), 1);
        assert_abs_diff_eq!(m.gram.upper[0].2, 1.0 / 6.0, epsilon = 3e-3);
    }

    #[test]
    fn hats_do_not_reproduce_affine_targets() {
        // c_0 = ∫x(1-x)/∫(1-x) = 1/3, c_1 = ∫x^2/∫x = 2/3; ||x - Qx||^2 = 1/27.
        let f = Target::affine(0.0, vec![1.0]);
        let m = PopulationModel::compute(
            &f,
            &make_hat(1, 2).unwrap(),
            &MarginalMeasure::Uniform { dim: 1 },
            400_000,
            2,
        )
        .unwrap();
        assert_abs_diff_eq!(m.coeffs[0], 1.0 / 3.0, epsilon = 3e-3);
        assert_abs_diff_eq!(m.coeffs[1], 2.0 / 3.0, epsilon = 3e-3);
        assert_abs_diff_eq!(m.approx_sq, 1.0 / 27.0, epsilon = 1e-3);
    }

    #[test]
    fn total_error_decomposes_for_indicators() {
        let f = Target::affine(-0.5, vec![1.0]);
        let m = PopulationModel::compute(
            &f,
            &make_dyadic(1, 2).unwrap(),
            &MarginalMeasure::Uniform { dim: 1 },
            10,
            0,
        )
        .unwrap();
        let c = [0.1, -0.2, 0.0, 0.4];
        assert_abs_diff_eq!(
            m.total_sq_error(&c),
            m.approx_sq + m.estimation_sq_error(&c),
            epsilon = 1e-15
        );
    }
}
