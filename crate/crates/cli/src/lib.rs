//! Experiment harness for partition-of-unity regression estimators.
//!
//! Each experiment turns an [`ExperimentConfig`] into a [`Report`]: rows of
//! statistics, fitted rates and named pass/fail checks. Reports are a pure
//! function of the configuration, whatever the worker count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, FamilyName, Format, Settings};
pub use error::{CliError, CliResult};
pub use experiments::{
    exp_bernstein, exp_rate, exp_tail, exp_variance, run, run_oracle, run_validate,
};
pub use fit::{fit_loglog, fit_semilog, RateFit};
pub use report::{Check, Report, Status};

/// Runs `job` on a dedicated pool of `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> CliResult<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(job))
        }
    }
}
