//! The plug-in estimator `f_z = sum_v c_v(z) M_v` and its population
//! counterpart `Q_M f = sum_v c_v(f) M_v`.
//!
//! Empirical coefficients are ratios of the weighted response mass
//! `alpha_v(z) = (1/m) sum_j y_j M_v(x_j)` to the cell mass
//! `rho_v(z) = (1/m) sum_j M_v(x_j)`, with `c_v(z) = 0` on cells that received
//! no mass. Since every `c_v(z)` is a weighted average of the `y_j`, it is
//! bounded by `A` without any clipping.

mod population;

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{AffinePiece, DyadicAffine, Evaluable};
use crate::partition::{check_point, PartitionFamily};
use crate::problems::Dataset;

pub use population::{population_coeffs, Gram, PopulationModel, DEFAULT_QUADRATURE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffKind {
    Population,
    Empirical,
}

/// Per-cell `alpha_v` and `rho_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStatistics {
    pub alpha: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Coefficients `c_v` bound to the family they expand in.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCoeffs {
    family: PartitionFamily,
    coeffs: Vec<f64>,
    rho: Vec<f64>,
    bound_a: f64,
    kind: CoeffKind,
}

/// Unnormalized sums `sum_j y_j M_v(x_j)` and `sum_j M_v(x_j)`, accumulated
/// in sample order.
fn weighted_sums(data: &Dataset, family: &PartitionFamily) -> Result<(Vec<f64>, Vec<f64>)> {
    if data.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: data.dim(),
        });
    }
    let mut response = vec![0.0; family.size()];
    let mut mass = vec![0.0; family.size()];
    let mut w = Vec::with_capacity(family.max_support());
    for (x, y) in data.iter() {
        family.weights_unchecked(x, &mut w);
        for &(v, m) in &w {
            response[v] += y * m;
            mass[v] += m;
        }
    }
    Ok((response, mass))
}

fn check_responses(data: &Dataset, bound_a: f64) -> Result<()> {
    if !(bound_a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bound A must be positive, got {bound_a}"
        )));
    }
    match data.responses().iter().position(|y| !(y.abs() <= bound_a)) {
        Some(index) => Err(Error::ResponseOutOfBounds {
            index,
            y: data.responses()[index],
            bound: bound_a,
        }),
        None => Ok(()),
    }
}

/// `alpha_v(z)` and `rho_v(z)` for every cell.
pub fn empirical_stats(data: &Dataset, family: &PartitionFamily) -> Result<CellStatistics> {
    check_responses(data, data.bound_a())?;
    let (response, mass) = weighted_sums(data, family)?;
    let m = data.len() as f64;
    Ok(CellStatistics {
        alpha: response.into_iter().map(|s| s / m).collect(),
        rho: mass.into_iter().map(|s| s / m).collect(),
    })
}

/// Fits the empirical coefficients `c_v(z)`.
pub fn fit(data: &Dataset, family: &PartitionFamily, bound_a: f64) -> Result<EstimatorCoeffs> {
    check_responses(data, bound_a)?;
    let (response, mass) = weighted_sums(data, family)?;
    let m = data.len() as f64;
    let coeffs = response
        .iter()
        .zip(&mass)
        .map(|(&s, &w)| if w > 0.0 { s / w } else { 0.0 })
        .collect();
    Ok(EstimatorCoeffs {
        family: *family,
        coeffs,
        rho: mass.into_iter().map(|w| w / m).collect(),
        bound_a,
        kind: CoeffKind::Empirical,
    })
}

/// `sum_v c_v M_v(x)` after checking that `family` is the one `coeffs` was
/// built for.
pub fn evaluate(coeffs: &EstimatorCoeffs, family: &PartitionFamily, x: &[f64]) -> Result<f64> {
    if coeffs.family != *family {
        return Err(Error::InvalidParameter(format!(
            "coefficients belong to {}, not {}",
            coeffs.family.label(),
            family.label()
        )));
    }
    coeffs.evaluate(x)
}

impl EstimatorCoeffs {
    pub fn new(
        family: PartitionFamily,
        coeffs: Vec<f64>,
        rho: Vec<f64>,
        bound_a: f64,
        kind: CoeffKind,
    ) -> Result<Self> {
        if coeffs.len() != family.size() || rho.len() != family.size() {
            return Err(Error::DimensionMismatch {
                expected: family.size(),
                got: coeffs.len().min(rho.len()),
            });
        }
        Ok(Self {
            family,
            coeffs,
            rho,
            bound_a,
            kind,
        })
    }

    pub fn family(&self) -> &PartitionFamily {
        &self.family
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Cell masses the coefficients were computed with.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn bound_a(&self) -> f64 {
        self.bound_a
    }

    pub fn kind(&self) -> CoeffKind {
        self.kind
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.family.dim())?;
        Ok(self.eval(x))
    }

    /// CSV with columns `index,c_v,rho_v`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "c_v", "rho_v"])?;
        for (v, (c, r)) in self.coeffs.iter().zip(&self.rho).enumerate() {
            w.write_record([v.to_string(), c.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(
        reader: R,
        family: PartitionFamily,
        bound_a: f64,
        kind: CoeffKind,
    ) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut coeffs = vec![0.0; family.size()];
        let mut rho = vec![0.0; family.size()];
        let mut seen = vec![false; family.size()];
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidParameter(format!("not a number: `{s}`")))
        };
        for record in r.records() {
            let record = record?;
            if record.len() < 3 {
                return Err(Error::InvalidParameter(
                    "coefficient rows need index,c_v,rho_v".into(),
                ));
            }
            let v: usize = record[0]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad index `{}`", &record[0])))?;
            if v >= family.size() {
                return Err(Error::InvalidParameter(format!(
                    "index {v} outside family of size {}",
                    family.size()
                )));
            }
            coeffs[v] = num(&record[1])?;
            rho[v] = num(&record[2])?;
            seen[v] = true;
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "missing coefficient for index {v}"
            )));
        }
        Self::new(family, coeffs, rho, bound_a, kind)
    }
}

impl Evaluable for EstimatorCoeffs {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut w = Vec::with_capacity(self.family.max_support());
        self.family.weights_unchecked(x, &mut w);
        w.iter().map(|&(v, m)| self.coeffs[v] * m).sum()
    }

    fn dyadic_affine(&self) -> Option<DyadicAffine> {
        let crate::partition::FamilyKind::DyadicIndicator { level } = self.family.kind() else {
            return None;
        };
        let dim = self.family.dim();
        Some(DyadicAffine {
            dim,
            level,
            pieces: self
                .coeffs
                .iter()
                .map(|&c| AffinePiece {
                    center_value: c,
                    gradient: vec![0.0; dim],
                })
                .collect(),
        })
    }
}
