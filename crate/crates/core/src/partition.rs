//! Partition-of-unity families `{M_v}` on the unit cube `[0,1]^d`.
//!
//! A family is a finite set of functions with `0 <= M_v(x) <= 1` and
//! `sum_v M_v(x) = 1` everywhere on the cube. Two constructions are provided:
//!
//! * indicators of the regular dyadic grid at level `l` (`2^(d*l)` cells), and
//! * nodal piecewise-linear hats on equispaced knots, in one dimension or as
//!   tensor products of one-dimensional hats (`k^d` functions).
//!
//! Evaluation is sparse: only the basis functions that are nonzero at `x` are
//! reported, which keeps fitting linear in the number of samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::ProbeSet;

/// The construction behind a [`PartitionFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    DyadicIndicator { level: u32 },
    Hat1D { knots: usize },
    TensorHat { knots: usize },
}

/// An immutable, evaluable partition-of-unity family on `[0,1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionFamily {
    dim: usize,
    size: usize,
    kind: FamilyKind,
}

/// Anything that can be evaluated as a sparse partition of unity.
///
/// [`PartitionFamily`] is the production implementation; the trait exists so
/// that [`validate_partition`] can be pointed at other (possibly broken)
/// families.
pub trait PartitionOfUnity: Sync {
    fn dim(&self) -> usize;

    /// Number of basis functions `N = |T|`.
    fn size(&self) -> usize;

    /// Clears `out` and fills it with the nonzero `(v, M_v(x))` pairs.
    fn weights_into(&self, x: &[f64], out: &mut Vec<(usize, f64)>) -> Result<()>;

    fn weights(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::with_capacity(4);
        self.weights_into(x, &mut out)?;
        Ok(out)
    }
}

pub(crate) fn check_point(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::OutOfDomain {
            point: x.to_vec(),
            dim,
        });
    }
    Ok(())
}

/// Indicator family of the `2^(dim*level)` dyadic cubes of side `2^-level`.
///
/// Cells are half-open `[j 2^-l, (j+1) 2^-l)` per axis, except that the face
/// `x_i = 1` belongs to the last cell along axis `i`.
pub fn make_dyadic(dim: usize, level: u32) -> Result<PartitionFamily> {
    PartitionFamily::dyadic(dim, level)
}

/// Nodal hat basis on `knots` equispaced knots per axis: [`FamilyKind::Hat1D`]
/// for `dim == 1`, [`FamilyKind::TensorHat`] otherwise.
pub fn make_hat(dim: usize, knots: usize) -> Result<PartitionFamily> {
    if dim == 1 {
        PartitionFamily::hat(knots)
    } else {
        PartitionFamily::tensor_hat(dim, knots)
    }
}

/// Sparse evaluation of every `M_v(x)`.
pub fn evaluate_family(family: &PartitionFamily, x: &[f64]) -> Result<Vec<(usize, f64)>> {
    family.weights(x)
}

impl PartitionFamily {
    pub fn dyadic(dim: usize, level: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        let bits = (dim as u64)
            .checked_mul(level as u64)
            .filter(|&b| b < usize::BITS as u64 - 1)
            .ok_or_else(|| Error::SizeOverflow(format!("2^({dim}*{level}) dyadic cells")))?;
        Ok(Self {
            dim,
            size: 1usize << bits,
            kind: FamilyKind::DyadicIndicator { level },
        })
    }

    pub fn hat(knots: usize) -> Result<Self> {
        if knots < 2 {
            return Err(Error::InvalidParameter(format!(
                "hat families need at least 2 knots, got {knots}"
            )));
        }
        Ok(Self {
            dim: 1,
            size: knots,
            kind: FamilyKind::Hat1D { knots },
        })
    }

    pub fn tensor_hat(dim: usize, knots: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if knots < 2 {
            return Err(Error::InvalidParameter(format!(
                "hat families need at least 2 knots, got {knots}"
            )));
        }
        let size = u32::try_from(dim)
            .ok()
            .and_then(|d| knots.checked_pow(d))
            .ok_or_else(|| Error::SizeOverflow(format!("{knots}^{dim} tensor hats")))?;
        Ok(Self {
            dim,
            size,
            kind: FamilyKind::TensorHat { knots },
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// True when every `M_v` is an indicator, so `M_u M_v = 0` for `u != v`.
    pub fn is_indicator(&self) -> bool {
        matches!(self.kind, FamilyKind::DyadicIndicator { .. })
    }

    /// Cells per axis for dyadic families.
    pub fn dyadic_cells_per_axis(&self) -> Option<usize> {
        match self.kind {
            FamilyKind::DyadicIndicator { level } => Some(1usize << level),
            _ => None,
        }
    }

    /// Upper bound on the number of nonzero weights at any point.
    pub fn max_support(&self) -> usize {
        match self.kind {
            FamilyKind::DyadicIndicator { .. } => 1,
            FamilyKind::Hat1D { .. } => 2,
            FamilyKind::TensorHat { .. } => 1 << self.dim.min(usize::BITS as usize - 1),
        }
    }

    /// Per-axis multi-index of basis function `v`, axis 0 most significant.
    pub fn multi_index(&self, v: usize) -> Vec<usize> {
        let radix = match self.kind {
            FamilyKind::DyadicIndicator { level } => 1usize << level,
            FamilyKind::Hat1D { knots } | FamilyKind::TensorHat { knots } => knots,
        };
        let mut rest = v;
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = rest % radix;
            rest /= radix;
        }
        idx
    }

    /// Short human-readable label, e.g. `dyadic(d=1,l=4)`.
    pub fn label(&self) -> String {
        match self.kind {
            FamilyKind::DyadicIndicator { level } => format!("dyadic(d={},l={level})", self.dim),
            FamilyKind::Hat1D { knots } => format!("hat(k={knots})"),
            FamilyKind::TensorHat { knots } => format!("tensor-hat(d={},k={knots})", self.dim),
        }
    }

    /// Unchecked sparse evaluation; `x` must already lie in the cube.
    pub(crate) fn weights_unchecked(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        out.clear();
        match self.kind {
            FamilyKind::DyadicIndicator { level } => {
                let cells = 1usize << level;
                let scale = cells as f64;
                let mut index = 0usize;
                for &xi in x {
                    // Power-of-two scaling is exact, so the floor is too.
                    let j = ((xi * scale) as usize).min(cells - 1);
                    index = index * cells + j;
                }
                out.push((index, 1.0));
            }
            FamilyKind::Hat1D { knots } => {
                let (pairs, n) = hat_axis(x[0], knots);
                out.extend_from_slice(&pairs[..n]);
            }
            FamilyKind::TensorHat { knots } => {
                out.push((0, 1.0));
                for &xi in x {
                    let (pairs, n) = hat_axis(xi, knots);
                    let prev = out.len();
                    for e in 0..prev {
                        let (idx, w) = out[e];
                        for &(j, wj) in &pairs[1..n] {
                            out.push((idx * knots + j, w * wj));
                        }
                        let (j0, w0) = pairs[0];
                        out[e] = (idx * knots + j0, w * w0);
                    }
                }
            }
        }
    }
}

/// Nonzero 1-d hat weights at `t` on `knots` equispaced knots.
fn hat_axis(t: f64, knots: usize) -> ([(usize, f64); 2], usize) {
    let cells = (knots - 1) as f64;
    let s = t * cells;
    let i = (s.floor() as usize).min(knots - 2);
    let frac = s - i as f64;
    if frac <= 0.0 {
        ([(i, 1.0), (0, 0.0)], 1)
    } else if frac >= 1.0 {
        ([(i + 1, 1.0), (0, 0.0)], 1)
    } else {
        ([(i, 1.0 - frac), (i + 1, frac)], 2)
    }
}

impl PartitionOfUnity for PartitionFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn size(&self) -> usize {
        self.size
    }

    fn weights_into(&self, x: &[f64], out: &mut Vec<(usize, f64)>) -> Result<()> {
        check_point(x, self.dim)?;
        self.weights_unchecked(x, out);
        Ok(())
    }
}

/// Outcome of [`validate_partition`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub family: String,
    pub size: usize,
    pub probes: usize,
    /// `max |sum_v M_v(x) - 1|` over the probes.
    pub max_deviation: f64,
    /// Number of weights outside `[-1e-12, 1 + 1e-12]` or with index `>= size`.
    pub range_violations: usize,
    /// Largest number of nonzero weights seen at a single probe.
    pub max_support: usize,
    pub passed: bool,
}

pub const UNITY_TOLERANCE: f64 = 1e-9;
pub const RANGE_TOLERANCE: f64 = 1e-12;

/// Checks `0 <= M_v <= 1` and `sum_v M_v = 1` on `probes` low-discrepancy
/// points (cube corners first).
pub fn validate_partition<P: PartitionOfUnity + ?Sized>(
    family: &P,
    probes: usize,
    seed: u64,
) -> ValidationReport {
    let set = ProbeSet::new(family.dim(), probes, seed);
    let mut x = vec![0.0; family.dim()];
    let mut w = Vec::new();
    let mut max_deviation = 0.0_f64;
    let mut range_violations = 0;
    let mut max_support = 0;
    let mut evaluation_failed = false;
    for n in 0..set.len() {
        set.point_into(n, &mut x);
        if family.weights_into(&x, &mut w).is_err() {
            evaluation_failed = true;
            continue;
        }
        max_support = max_support.max(w.len());
        let mut sum = 0.0;
        for &(v, m) in &w {
            if v >= family.size() || !(-RANGE_TOLERANCE..=1.0 + RANGE_TOLERANCE).contains(&m) {
                range_violations += 1;
            }
            sum += m;
        }
        let dev = (sum - 1.0).abs();
        if dev.is_nan() {
            max_deviation = f64::INFINITY;
        } else {
            max_deviation = max_deviation.max(dev);
        }
    }
    ValidationReport {
        family: format!(
            "{}-dimensional family of size {}",
            family.dim(),
            family.size()
        ),
        size: family.size(),
        probes,
        max_deviation,
        range_violations,
        max_support,
        passed: !evaluation_failed && max_deviation <= UNITY_TOLERANCE && range_violations == 0,
    }
}
