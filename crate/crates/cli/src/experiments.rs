//! The experiment drivers behind the subcommands.
//!
//! Grid points run in a fixed order; each one draws its replications from
//! a seed derived from the master seed and the grid index, so reports depend
//! only on the configuration.

use std::collections::btree_map::{BTreeMap, Entry};

use pou_core::estimator::empirical_stats;
use pou_core::metrics::{
    bernstein_alpha_bound, bernstein_rho_bound, estimate_with_model, exact_expected_error,
    per_replication, tail_bound, BoundInputs,
};
use pou_core::partition::{
    make_dyadic, make_hat, validate_partition, PartitionFamily, PartitionOfUnity,
};
use pou_core::{ErrorKind, Noise, PopulationModel, RegressionProblem};

use crate::config::{ExperimentConfig, ExperimentKind, FamilyName};
use crate::error::{CliError, CliResult};
use crate::fit::{fit_loglog, fit_semilog};
use crate::report::{Check, FitSummary, PlotSpec, Report, Value};

/// Allowed distance between a fitted slope and its target.
pub const SLOPE_TOLERANCE: f64 = 0.15;
/// Largest allowed max/min ratio of `mean_sq * m / N` across the grid.
pub const RATIO_SPREAD_LIMIT: f64 = 5.0;
/// Sampling allowance, in binomial standard errors, for probability bounds.
pub const SIGMA_BAND: f64 = 3.0;
/// Smallest r² accepted for the exponential tail fit.
pub const DECAY_R_SQUARED: f64 = 0.8;
/// Default sweep of `validate` when no family size is given.
pub const VALIDATE_LEVELS: std::ops::RangeInclusive<u32> = 0..=4;
pub const VALIDATE_KNOTS: std::ops::RangeInclusive<usize> = 2..=17;

/// SplitMix64 of `master + index`: decorrelated per-grid-point seeds.
pub fn grid_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run(config: &ExperimentConfig) -> CliResult<Report> {
    match config.kind {
        ExperimentKind::Validate => run_validate(config),
        ExperimentKind::ExpVariance => exp_variance(config),
        ExperimentKind::ExpRate => exp_rate(config),
        ExperimentKind::ExpTail => exp_tail(config),
        ExperimentKind::ExpBernstein => exp_bernstein(config),
        ExperimentKind::Oracle => run_oracle(config),
    }
}

fn population_model(
    config: &ExperimentConfig,
    problem: &RegressionProblem,
    family: &PartitionFamily,
) -> CliResult<PopulationModel> {
    Ok(PopulationModel::compute(
        problem.truth(),
        family,
        problem.measure(),
        config.mc_points,
        config.seed,
    )?)
}

fn single_m(config: &ExperimentConfig) -> CliResult<usize> {
    match config.m.as_slice() {
        [m] => Ok(*m),
        _ => Err(CliError::Config(format!(
            "{} takes a single sample size in --m",
            config.kind.name()
        ))),
    }
}

fn binomial_se(freq: f64, r: usize) -> f64 {
    (freq * (1.0 - freq) / r as f64).sqrt()
}

fn fraction_at_least(values: &[f64], threshold: f64, strict: bool) -> (usize, f64) {
    let count = values
        .iter()
        .filter(|&&v| {
            if strict {
                v > threshold
            } else {
                v >= threshold
            }
        })
        .count();
    (count, count as f64 / values.len() as f64)
}

fn slope_check(
    report: &mut Report,
    name: &str,
    x: &str,
    y: &str,
    points: &[(f64, f64)],
    target: f64,
) {
    let positive: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 > 0.0).collect();
    if positive.len() < 3 {
        report.checks.push(Check::skipped(
            "slope",
            format!(
                "{} rows with positive error; a rate fit needs 3",
                positive.len()
            ),
        ));
        return;
    }
    match fit_loglog(&positive) {
        Ok(fit) => {
            let ok = (fit.slope - target).abs() <= SLOPE_TOLERANCE;
            report.checks.push(Check::new(
                "slope",
                ok,
                format!(
                    "slope {:.4}, target {:.4} ± {SLOPE_TOLERANCE}, r² {:.4}",
                    fit.slope, target, fit.r_squared
                ),
            ));
            report.fits.push(FitSummary {
                name: name.to_owned(),
                x: x.to_owned(),
                y: y.to_owned(),
                target_slope: Some(target),
                fit,
            });
        }
        Err(e) => report
            .checks
            .push(Check::new("slope", false, e.to_string())),
    }
}

/// Sweep of partition checks: one family when a size is configured,
/// otherwise every level in 0..=4 or knot count in 2..=17.
pub fn run_validate(config: &ExperimentConfig) -> CliResult<Report> {
    let families: Vec<PartitionFamily> =
        if config.level.is_some() || config.knots.is_some() || config.n.len() == 1 {
            vec![config.single_family()?]
        } else if !config.n.is_empty() {
            config
                .n
                .iter()
                .map(|&n| config.family_of_size(n))
                .collect::<CliResult<_>>()?
        } else {
            match config.family {
                FamilyName::Dyadic => VALIDATE_LEVELS
                    .map(|l| make_dyadic(config.dim, l))
                    .collect::<Result<_, _>>()?,
                _ => VALIDATE_KNOTS
                    .map(|k| make_hat(config.dim, k))
                    .collect::<Result<_, _>>()?,
            }
        };
    let mut report = Report::new(
        config,
        &[
            "family",
            "N",
            "probes",
            "max_deviation",
            "range_violations",
            "max_support",
            "passed",
        ],
    );
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    for family in &families {
        let v = validate_partition(family, config.mc_points, config.seed);
        worst = worst.max(v.max_deviation);
        if !v.passed {
            failures.push(v.family.clone());
        }
        report.push_row(vec![
            v.family.into(),
            v.size.into(),
            v.probes.into(),
            v.max_deviation.into(),
            v.range_violations.into(),
            v.max_support.into(),
            v.passed.into(),
        ]);
    }
    report.checks.push(Check::new(
        "partition-of-unity",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} families, worst deviation {worst:e}", families.len())
        } else {
            format!("failed: {}", failures.join(", "))
        },
    ));
    Ok(report)
}

/// `E ||Q f - f_z||^2` over the (m, N) grid and its scaling in `N/m`.
pub fn exp_variance(config: &ExperimentConfig) -> CliResult<Report> {
    let problem = config.problem()?;
    let mut report = Report::new(
        config,
        &[
            "m",
            "N",
            "N_over_m",
            "mean_sq",
            "std_err",
            "ratio",
            "ratio_std_err",
        ],
    );
    let mut points = Vec::new();
    let mut ratios = Vec::new();
    for (i, &n) in config.n.iter().enumerate() {
        let family = config.family_of_size(n)?;
        let model = population_model(config, &problem, &family)?;
        for (j, &m) in config.m.iter().enumerate() {
            if m < n {
                return Err(CliError::Config(format!(
                    "exp-variance needs m >= N, got m = {m} with N = {n}"
                )));
            }
            let seed = grid_seed(config.seed, (i * config.m.len() + j) as u64);
            let est = estimate_with_model(
                &problem,
                &model,
                m,
                config.replications,
                config.mc_points,
                seed,
                ErrorKind::Estimation,
            )?;
            let scale = m as f64 / n as f64;
            let ratio = est.mean_sq * scale;
            points.push((n as f64 / m as f64, est.mean_sq));
            ratios.push(ratio);
            report.push_row(vec![
                m.into(),
                n.into(),
                (n as f64 / m as f64).into(),
                est.mean_sq.into(),
                est.std_err.into(),
                ratio.into(),
                (est.std_err * scale).into(),
            ]);
        }
    }
    slope_check(&mut report, "variance", "N/m", "mean_sq", &points, 1.0);
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    if hi == 0.0 {
        report
            .checks
            .push(Check::skipped("ratio-spread", "every row has zero error"));
    } else {
        let spread = hi / lo;
        report.checks.push(Check::new(
            "ratio-spread",
            spread <= RATIO_SPREAD_LIMIT,
            format!("max/min of mean_sq*m/N = {spread:.4} (limit {RATIO_SPREAD_LIMIT})"),
        ));
    }
    report.plot = Some(PlotSpec {
        x: "N_over_m".into(),
        y: "mean_sq".into(),
        log_x: true,
        log_y: true,
    });
    Ok(report)
}

/// `E ||f - f_z||^2` with `N` tracking `m^(1/(1+2s))`.
pub fn exp_rate(config: &ExperimentConfig) -> CliResult<Report> {
    let problem = config.problem()?;
    let probe_family = config.nearest_admissible(2.0)?;
    let s = match config
        .s
        .or_else(|| problem.smoothness(&probe_family.kind()))
    {
        Some(s) => s,
        None => {
            return Err(CliError::Config(format!(
                "smoothness of `{}` relative to the {} family is unknown; pass --s",
                problem.name(),
                config.family
            )))
        }
    };
    let target_slope = -2.0 * s / (1.0 + 2.0 * s);
    let mut report = Report::new(
        config,
        &["m", "N_target", "N", "mean_sq", "std_err", "approx_sq"],
    );
    let mut models: BTreeMap<usize, PopulationModel> = BTreeMap::new();
    let mut points = Vec::new();
    let mut bias_violations = Vec::new();
    for (j, &m) in config.m.iter().enumerate() {
        let target = (m as f64).powf(1.0 / (1.0 + 2.0 * s));
        let family = config.nearest_admissible(target)?;
        let n = family.size();
        if n > m {
            return Err(CliError::Config(format!(
                "m = {m} is smaller than the selected N = {n}"
            )));
        }
        let model = match models.entry(n) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(population_model(config, &problem, &family)?),
        };
        let est = estimate_with_model(
            &problem,
            model,
            m,
            config.replications,
            config.mc_points,
            grid_seed(config.seed, j as u64),
            ErrorKind::Total,
        )?;
        if model.approx_sq > est.mean_sq + SIGMA_BAND * est.std_err {
            bias_violations.push(m);
        }
        points.push((m as f64, est.mean_sq));
        report.push_row(vec![
            m.into(),
            target.into(),
            n.into(),
            est.mean_sq.into(),
            est.std_err.into(),
            model.approx_sq.into(),
        ]);
    }
    slope_check(&mut report, "rate", "m", "mean_sq", &points, target_slope);
    report.checks.push(Check::new(
        "bias-below-total",
        bias_violations.is_empty(),
        if bias_violations.is_empty() {
            "approx_sq <= mean_sq + 3 std_err at every m".to_owned()
        } else {
            format!("violated at m = {bias_violations:?}")
        },
    ));
    report.plot = Some(PlotSpec {
        x: "m".into(),
        y: "mean_sq".into(),
        log_x: true,
        log_y: true,
    });
    Ok(report)
}

/// Default tail grid `A sqrt(N/m) (0.2 + 0.03 k)`, `k = 0..8`.
pub fn default_eta_grid(a: f64, m: usize, n: usize) -> Vec<f64> {
    let scale = a * (n as f64 / m as f64).sqrt();
    (0..8).map(|k| scale * (0.2 + 0.03 * k as f64)).collect()
}

/// Empirical `P(||Q f - f_z|| > eta)` against the exponential tail bound.
pub fn exp_tail(config: &ExperimentConfig) -> CliResult<Report> {
    let problem = config.problem()?;
    let family = config.single_family()?;
    let m = single_m(config)?;
    let n = family.size();
    let a = problem.bound_a();
    let etas = config
        .eta
        .clone()
        .unwrap_or_else(|| default_eta_grid(a, m, n));
    let model = population_model(config, &problem, &family)?;
    let r = config.replications;
    let norms = per_replication(
        &problem,
        &family,
        m,
        r,
        grid_seed(config.seed, 0),
        |_, fitted| model.estimation_sq_error(fitted.coeffs()).sqrt(),
    )?;

    let mut report = Report::new(
        config,
        &["eta", "exceed", "freq", "binom_std_err", "bound", "pass"],
    );
    let mut decay = Vec::new();
    let mut invalid = Vec::new();
    let mut beyond = (0, 0);
    for &eta in &etas {
        let (count, freq) = fraction_at_least(&norms, eta, true);
        let se = binomial_se(freq, r);
        let bound = tail_bound(eta, m as u64, n, a)?;
        let pass = freq <= bound + SIGMA_BAND * se;
        if !pass {
            invalid.push(eta);
        }
        if eta >= 2.0 * a {
            beyond.0 += 1;
            beyond.1 += count;
        }
        if count > 0 {
            decay.push((eta * eta, freq));
        }
        report.push_row(vec![
            eta.into(),
            count.into(),
            freq.into(),
            se.into(),
            bound.into(),
            pass.into(),
        ]);
    }
    report.checks.push(Check::new(
        "bound-validity",
        invalid.is_empty(),
        format!(
            "{} of {} rows exceed bound + 3 binomial std err",
            invalid.len(),
            etas.len()
        ),
    ));
    if beyond.0 == 0 {
        report
            .checks
            .push(Check::skipped("beyond-2A", "no eta >= 2A in the grid"));
    } else {
        report.checks.push(Check::new(
            "beyond-2A",
            beyond.1 == 0,
            format!(
                "{} exceedances over {} rows with eta >= 2A",
                beyond.1, beyond.0
            ),
        ));
    }
    if decay.len() < 3 {
        report.checks.push(Check::skipped(
            "decay",
            format!("{} nonzero rows; the fit needs 3", decay.len()),
        ));
    } else {
        let fit = fit_semilog(&decay)?;
        let ok = fit.slope < 0.0 && fit.r_squared >= DECAY_R_SQUARED;
        report.checks.push(Check::new(
            "decay",
            ok,
            format!(
                "log freq vs eta²: slope {:.4}, r² {:.4} (need < 0 and >= {DECAY_R_SQUARED})",
                fit.slope, fit.r_squared
            ),
        ));
        report.fits.push(FitSummary {
            name: "decay".into(),
            x: "eta^2".into(),
            y: "freq".into(),
            target_slope: None,
            fit,
        });
    }
    report.plot = Some(PlotSpec {
        x: "eta".into(),
        y: "freq".into(),
        log_x: false,
        log_y: true,
    });
    Ok(report)
}

/// Default deviation grid `(A / sqrt m) {1/4, 1/2, 1, 2, 4}`.
pub fn default_eps_grid(a: f64, m: usize) -> Vec<f64> {
    [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|k| k * a / (m as f64).sqrt())
        .collect()
}

/// Empirical deviation frequencies of `alpha_v(z)` and `rho_v(z)` against
/// their Bernstein bounds.
pub fn exp_bernstein(config: &ExperimentConfig) -> CliResult<Report> {
    let problem = config.problem()?;
    let family = config.single_family()?;
    let m = single_m(config)?;
    let a = problem.bound_a();
    let eps = config.eps.clone().unwrap_or_else(|| default_eps_grid(a, m));
    let model = population_model(config, &problem, &family)?;
    let cells: Vec<usize> = match config.cell {
        Some(v) if v >= family.size() => {
            return Err(CliError::Config(format!("cell {v} out of range for N = {}", family.size())))
        }
        Some(v) if model.rho[v] == 0.0 => {
            return Err(CliError::Config(format!(
                "cell {v} has rho_v = 0, so alpha_v, rho_v and c_v are all 0 by convention and never deviate; pick a cell with mass"
            )))
        }
        Some(v) => vec![v],
        None => (0..family.size()).collect(),
    };
    let r = config.replications;
    let stats = per_replication(
        &problem,
        &family,
        m,
        r,
        grid_seed(config.seed, 0),
        |data, _| empirical_stats(data, &family),
    )?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new(
        config,
        &[
            "cell",
            "eps",
            "rho_v",
            "alpha_freq",
            "alpha_bound",
            "alpha_pass",
            "rho_freq",
            "rho_bound",
            "rho_pass",
        ],
    );
    let mut alpha_fail = 0;
    let mut rho_fail = 0;
    let mut trivial = (0, 0);
    let mut empty_cells = Vec::new();
    for &v in &cells {
        let rho_v = model.rho[v];
        if rho_v == 0.0 {
            empty_cells.push(v);
            continue;
        }
        let alpha_dev: Vec<f64> = stats
            .iter()
            .map(|s| (s.alpha[v] - model.alpha[v]).abs())
            .collect();
        let rho_dev: Vec<f64> = stats.iter().map(|s| (s.rho[v] - rho_v).abs()).collect();
        for &e in &eps {
            let inputs = BoundInputs {
                a,
                m: m as u64,
                rho_v,
                epsilon: e,
            };
            let (_, fa) = fraction_at_least(&alpha_dev, e, false);
            let (_, fr) = fraction_at_least(&rho_dev, e, false);
            let ba = bernstein_alpha_bound(&inputs)?;
            let br = bernstein_rho_bound(&inputs)?;
            let pa = fa <= ba + SIGMA_BAND * binomial_se(fa, r);
            let pr = fr <= br + SIGMA_BAND * binomial_se(fr, r);
            alpha_fail += usize::from(!pa);
            rho_fail += usize::from(!pr);
            if e > a * rho_v + a {
                trivial.0 += 1;
                trivial.1 += usize::from(fa > 0.0);
            }
            if e > 1.0 {
                trivial.0 += 1;
                trivial.1 += usize::from(fr > 0.0);
            }
            report.push_row(vec![
                v.into(),
                e.into(),
                rho_v.into(),
                fa.into(),
                ba.into(),
                pa.into(),
                fr.into(),
                br.into(),
                pr.into(),
            ]);
        }
    }
    let rows = report.rows.len();
    report.checks.push(Check::new(
        "alpha-bound",
        alpha_fail == 0,
        format!("{alpha_fail} of {rows} rows violate"),
    ));
    report.checks.push(Check::new(
        "rho-bound",
        rho_fail == 0,
        format!("{rho_fail} of {rows} rows violate"),
    ));
    if trivial.0 == 0 {
        report.checks.push(Check::skipped(
            "trivial-zero",
            "no eps beyond the range of the statistics",
        ));
    } else {
        report.checks.push(Check::new(
            "trivial-zero",
            trivial.1 == 0,
            format!(
                "{} nonzero frequencies among {} out-of-range deviations",
                trivial.1, trivial.0
            ),
        ));
    }
    if !empty_cells.is_empty() {
        report.checks.push(Check::skipped(
            "zero-mass-cells",
            format!("cells {empty_cells:?} have rho_v = 0"),
        ));
    }
    Ok(report)
}

/// Exact enumeration against the Monte Carlo estimate for atomic problems.
pub fn run_oracle(config: &ExperimentConfig) -> CliResult<Report> {
    let problem = config.problem()?;
    let family = config.single_family()?;
    let atoms = problem.measure().atoms().ok_or_else(|| {
        CliError::Config(format!(
            "oracle needs an atomic problem; `{}` is not",
            problem.name()
        ))
    })?;
    let model = population_model(config, &problem, &family)?;
    let mut report = Report::new(
        config,
        &["m", "exact", "estimate", "std_err", "abs_diff", "pass"],
    );
    let mut disagreements = Vec::new();
    let mut exact_values = Vec::new();
    for (j, &m) in config.m.iter().enumerate() {
        let exact = exact_expected_error(&problem, &family, m)?;
        let est = estimate_with_model(
            &problem,
            &model,
            m,
            config.replications,
            config.mc_points,
            grid_seed(config.seed, j as u64),
            ErrorKind::Estimation,
        )?;
        let diff = (est.mean_sq - exact).abs();
        let pass = diff <= SIGMA_BAND * est.std_err;
        if !pass {
            disagreements.push(m);
        }
        exact_values.push(exact);
        report.push_row(vec![
            m.into(),
            exact.into(),
            est.mean_sq.into(),
            est.std_err.into(),
            diff.into(),
            Value::Flag(pass),
        ]);
    }
    report.checks.push(Check::new(
        "agreement",
        disagreements.is_empty(),
        if disagreements.is_empty() {
            "|estimate - exact| <= 3 std_err at every m".to_owned()
        } else {
            format!("disagreement at m = {disagreements:?}")
        },
    ));
    let constant_noiseless =
        problem.truth().is_constant() && matches!(problem.noise(), Noise::Noiseless);
    if constant_noiseless {
        let always_occupied = atoms.iter().all(|atom| {
            family
                .weights(&atom.point)
                .map(|w| w.iter().filter(|&&(_, mv)| mv > 0.0).count() == family.size())
                .unwrap_or(false)
        });
        if always_occupied {
            let zero = exact_values.iter().all(|&e| e == 0.0);
            report.checks.push(Check::new(
                "constant-zero",
                zero,
                format!("exact values {exact_values:?}"),
            ));
        } else {
            report.checks.push(Check::skipped(
                "constant-zero",
                "some cell misses an atom, so empty cells (c_v = 0) make the error positive",
            ));
        }
    }
    Ok(report)
}
