//! Evaluable functions on the unit cube.
//!
//! Besides pointwise evaluation, a function may expose a piecewise-affine
//! description on a dyadic grid. Distances between such functions under the
//! uniform measure are integrated exactly instead of by Monte Carlo.

use std::fmt;
use std::sync::Arc;

/// A real function on `[0,1]^dim`.
pub trait Evaluable: Send + Sync {
    fn dim(&self) -> usize;

    /// Value at `x`; `x` is assumed to lie in the cube.
    fn eval(&self, x: &[f64]) -> f64;

    /// Exact piecewise-affine form on a dyadic grid, if there is one.
    fn dyadic_affine(&self) -> Option<DyadicAffine> {
        None
    }
}

/// One affine piece `value(x) = center_value + gradient . (x - cell_center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub center_value: f64,
    pub gradient: Vec<f64>,
}

/// A function that is affine on every cell of the level-`level` dyadic grid.
///
/// Pieces are indexed like the cells of the dyadic partition family (axis 0
/// most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicAffine {
    pub dim: usize,
    pub level: u32,
    pub pieces: Vec<AffinePiece>,
}

/// Refinement beyond this many cells falls back to sampling.
pub(crate) const MAX_EXACT_CELLS: usize = 1 << 22;

impl DyadicAffine {
    /// Re-expresses the function on the finer grid at `level`.
    pub fn refine(&self, level: u32) -> DyadicAffine {
        assert!(
            level >= self.level,
            "cannot coarsen a dyadic-affine function"
        );
        if level == self.level {
            return self.clone();
        }
        let fine = 1usize << level;
        let shift = level - self.level;
        let coarse = 1usize << self.level;
        let h_fine = 1.0 / fine as f64;
        let h_coarse = 1.0 / coarse as f64;
        let total = fine.pow(self.dim as u32);
        let mut pieces = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim];
        for cell in 0..total {
            let mut rest = cell;
            for slot in idx.iter_mut().rev() {
                *slot = rest % fine;
                rest /= fine;
            }
            let parent = idx
                .iter()
                .fold(0usize, |acc, &j| acc * coarse + (j >> shift));
            let p = &self.pieces[parent];
            let offset: f64 = idx
                .iter()
                .zip(&p.gradient)
                .map(|(&j, g)| {
                    let child_center = (j as f64 + 0.5) * h_fine;
                    let parent_center = ((j >> shift) as f64 + 0.5) * h_coarse;
                    g * (child_center - parent_center)
                })
                .sum();
            pieces.push(AffinePiece {
                center_value: p.center_value + offset,
                gradient: p.gradient.clone(),
            });
        }
        DyadicAffine {
            dim: self.dim,
            level,
            pieces,
        }
    }

    /// Exact `∫ (f - g)^2 dx` over the cube under the uniform measure.
    pub fn uniform_sq_distance(&self, other: &DyadicAffine) -> f64 {
        assert_eq!(self.dim, other.dim);
        let level = self.level.max(other.level);
        let a = self.refine(level);
        let b = other.refine(level);
        let h = 1.0 / (1usize << level) as f64;
        let vol = h.powi(self.dim as i32);
        let mut acc = crate::metrics::NeumaierSum::default();
        for (pa, pb) in a.pieces.iter().zip(&b.pieces) {
            let e0 = pa.center_value - pb.center_value;
            let slope_sq: f64 = pa
                .gradient
                .iter()
                .zip(&pb.gradient)
                .map(|(ga, gb)| (ga - gb) * (ga - gb))
                .sum();
            acc.add(vol * (e0 * e0 + slope_sq * h * h / 12.0));
        }
        acc.total()
    }

    pub(crate) fn cells_at(dim: usize, level: u32) -> Option<usize> {
        let bits = (dim as u32).checked_mul(level)?;
        (bits < 40)
            .then(|| 1usize << bits)
            .filter(|&n| n <= MAX_EXACT_CELLS)
    }
}

type SharedFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A regression target `f_rho`.
#[derive(Clone)]
pub enum Target {
    /// `offset + gradient . x`; constants have a zero gradient.
    Affine { offset: f64, gradient: Vec<f64> },
    Custom {
        dim: usize,
        label: String,
        f: SharedFn,
    },
}

impl Target {
    pub fn constant(dim: usize, value: f64) -> Self {
        Target::Affine {
            offset: value,
            gradient: vec![0.0; dim],
        }
    }

    pub fn affine(offset: f64, gradient: Vec<f64>) -> Self {
        Target::Affine { offset, gradient }
    }

    pub fn custom<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Target::Custom {
            dim,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    /// `(offset, gradient)` when the target is affine.
    pub fn as_affine(&self) -> Option<(f64, &[f64])> {
        match self {
            Target::Affine { offset, gradient } => Some((*offset, gradient)),
            Target::Custom { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Target::Affine { gradient, .. } if gradient.iter().all(|&g| g == 0.0))
    }
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Affine { offset, gradient } => f
                .debug_struct("Affine")
                .field("offset", offset)
                .field("gradient", gradient)
                .finish(),
            Target::Custom { dim, label, .. } => f
                .debug_struct("Custom")
                .field("dim", dim)
                .field("label", label)
                .finish(),
        }
    }
}

impl Evaluable for Target {
    fn dim(&self) -> usize {
        match self {
            Target::Affine { gradient, .. } => gradient.len(),
            Target::Custom { dim, .. } => *dim,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Target::Affine { offset, gradient } => {
                offset + gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>()
            }
            Target::Custom { f, .. } => f(x),
        }
    }

    fn dyadic_affine(&self) -> Option<DyadicAffine> {
        let (offset, gradient) = self.as_affine()?;
        let center = offset + gradient.iter().map(|g| 0.5 * g).sum::<f64>();
        Some(DyadicAffine {
            dim: gradient.len(),
            level: 0,
            pieces: vec![AffinePiece {
                center_value: center,
                gradient: gradient.to_vec(),
            }],
        })
    }
}

/// Wraps a closure as an [`Evaluable`] without structural information.
pub struct FnEval<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnEval<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Evaluable for FnEval<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn refined_affine_agrees_pointwise() {
        let t = Target::affine(0.25, vec![1.0, -2.0]);
        let fine = t.dyadic_affine().unwrap().refine(3);
        assert_eq!(fine.pieces.len(), 64);
        let x = [0.7, 0.2];
        let cell = (5.6f64 as usize) * 8 + 1;
        let p = &fine.pieces[cell];
        let center = [(5.0 + 0.5) / 8.0, (1.0 + 0.5) / 8.0];
        let v = p.center_value
            + p.gradient
                .iter()
                .zip(x.iter().zip(center))
                .map(|(g, (a, c))| g * (a - c))
                .sum::<f64>();
        assert_abs_diff_eq!(v, t.eval(&x), epsilon = 1e-14);
    }

    #[test]
    fn exact_distance_of_identity_to_zero() {
        let x = Target::affine(0.0, vec![1.0]).dyadic_affine().unwrap();
        let zero = Target::constant(1, 0.0).dyadic_affine().unwrap();
        assert_abs_diff_eq!(x.uniform_sq_distance(&zero), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            x.refine(5).uniform_sq_distance(&zero),
            1.0 / 3.0,
            epsilon = 1e-14
        );
    }
}
