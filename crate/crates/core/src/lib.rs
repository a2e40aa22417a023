//! Partition-of-unity plug-in regression.
//!
//! Given a family `{M_v}` with `0 <= M_v <= 1` and `sum_v M_v = 1` on
//! `[0,1]^d`, the estimator is
//!
//! ```text
//! f_z(x) = sum_v c_v(z) M_v(x),   c_v(z) = sum_j y_j M_v(x_j) / sum_j M_v(x_j)
//! ```
//!
//! with `c_v(z) = 0` on cells that received no mass. The crate provides the
//! families ([`partition`]), the estimator and its population counterpart
//! `Q_M f` ([`estimator`]), synthetic bounded regression problems
//! ([`problems`]), and distances, replicated error estimates, deviation
//! bounds and an exact enumeration oracle ([`metrics`]).
//!
//! ```
//! use pou_core::{estimator, partition, problems};
//!
//! let problem = problems::preset("lipschitz-1d").unwrap();
//! let family = partition::make_dyadic(1, 3).unwrap();
//! let data = problems::sample_dataset(&problem, 1000, 42).unwrap();
//! let fz = estimator::fit(&data, &family, problem.bound_a()).unwrap();
//! assert!(fz.evaluate(&[0.5]).unwrap().abs() <= 1.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod function;
pub mod metrics;
pub mod partition;
pub mod probe;
pub mod problems;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{fit, CellStatistics, CoeffKind, EstimatorCoeffs, PopulationModel};
pub use function::{Evaluable, FnEval, Target};
pub use metrics::{ErrorEstimate, ErrorKind};
pub use partition::{FamilyKind, PartitionFamily, PartitionOfUnity};
pub use problems::{Dataset, MarginalMeasure, Noise, RegressionProblem};
