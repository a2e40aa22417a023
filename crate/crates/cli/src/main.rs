use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pou_cli::config::{parse_count_list, parse_real_list};
use pou_cli::{
    CliError, CliResult, ExperimentConfig, ExperimentKind, FamilyName, Format, Settings,
};
use pou_core::estimator::fit;
use pou_core::partition::{make_dyadic, make_hat, PartitionFamily};
use pou_core::problems::{preset, sample_dataset};
use pou_core::{CoeffKind, Dataset, EstimatorCoeffs};

#[derive(Parser)]
#[command(
    name = "pou",
    version,
    about = "Partition-of-unity regression experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check partition of unity and weight ranges on probe points.
    Validate(Common),
    /// Fit coefficients to a CSV dataset (columns x_1..x_d, y).
    Fit {
        /// Dataset CSV.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate fitted coefficients at points.
    Eval {
        /// Coefficient CSV written by `fit`.
        #[arg(long)]
        coeffs: PathBuf,
        /// CSV of points (columns x_1..x_d).
        #[arg(long, conflicts_with = "x")]
        points: Option<PathBuf>,
        /// Points inline: coordinates separated by ',', points by ';'.
        #[arg(long)]
        x: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Draw a dataset from a preset problem.
    Sample(Common),
    /// Estimation error against N/m.
    ExpVariance(Common),
    /// Total error rate with N tied to m.
    ExpRate(Common),
    /// Tail frequencies against the exponential bound.
    ExpTail(Common),
    /// Cell statistic deviations against the Bernstein bounds.
    ExpBernstein(Common),
    /// Exact enumeration against Monte Carlo on atomic problems.
    Oracle(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Preset problem name.
    #[arg(long)]
    problem: Option<String>,
    /// dyadic, hat or tensor-hat.
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyName>,
    #[arg(long)]
    dim: Option<usize>,
    /// Dyadic level.
    #[arg(long)]
    level: Option<u32>,
    /// Knots per axis of a hat family.
    #[arg(long)]
    knots: Option<usize>,
    /// Sample sizes, e.g. `2^8..2^14` or `100,200`.
    #[arg(long)]
    m: Option<String>,
    /// Family sizes N, same syntax as --m.
    #[arg(long)]
    n: Option<String>,
    /// Tail thresholds.
    #[arg(long)]
    eta: Option<String>,
    /// Deviation thresholds for exp-bernstein.
    #[arg(long)]
    eps: Option<String>,
    /// Smoothness order of the truth.
    #[arg(long)]
    s: Option<f64>,
    /// Single cell for exp-bernstein.
    #[arg(long)]
    cell: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Response bound.
    #[arg(long = "A")]
    a: Option<f64>,
    /// Monte Carlo points for population integrals and probes.
    #[arg(long)]
    mc_points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or text.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Flat TOML file with the same keys as the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write `<prefix>.dat` and `<prefix>.gp` for gnuplot.
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<FamilyName, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

impl Common {
    /// Flags over the config file.
    fn settings(self) -> CliResult<Settings> {
        let file = match &self.config {
            Some(path) => {
                Settings::from_toml_str(&std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config file {}: {e}", path.display()))
                })?)?
            }
            None => Settings::default(),
        };
        let flags = Settings {
            problem: self.problem,
            family: self.family,
            dim: self.dim,
            level: self.level,
            knots: self.knots,
            m: self.m.as_deref().map(parse_count_list).transpose()?,
            n: self.n.as_deref().map(parse_count_list).transpose()?,
            eta: self.eta.as_deref().map(parse_real_list).transpose()?,
            eps: self.eps.as_deref().map(parse_real_list).transpose()?,
            s: self.s,
            cell: self.cell,
            replications: self.replications,
            seed: self.seed,
            a: self.a,
            mc_points: self.mc_points,
            out: self.out,
            format: self.format,
            threads: self.threads,
            plot: self.plot,
        };
        Ok(flags.over(file))
    }
}

fn output(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn family_from(settings: &Settings, dim: usize) -> CliResult<PartitionFamily> {
    let family = settings.family.unwrap_or(FamilyName::Dyadic);
    match (family, settings.level, settings.knots) {
        (FamilyName::Dyadic, Some(level), None) => Ok(make_dyadic(dim, level)?),
        (FamilyName::Hat | FamilyName::TensorHat, None, Some(k)) => Ok(make_hat(dim, k)?),
        _ => Err(CliError::Config(format!(
            "the {family} family needs exactly one of --level (dyadic) or --knots (hats)"
        ))),
    }
}

fn bound_from(settings: &Settings) -> CliResult<f64> {
    match (settings.a, &settings.problem) {
        (Some(a), _) => Ok(a),
        (None, Some(name)) => Ok(preset(name)
            .map_err(|e| CliError::Config(e.to_string()))?
            .bound_a()),
        (None, None) => Ok(1.0),
    }
}

fn run_fit(data: PathBuf, settings: Settings) -> CliResult<bool> {
    let a = bound_from(&settings)?;
    let dataset = Dataset::read_csv(BufReader::new(File::open(&data)?), a)?;
    let dim = settings.dim.unwrap_or(dataset.dim());
    let family = family_from(&settings, dim)?;
    let fitted = fit(&dataset, &family, a)?;
    let mut out = output(&settings.out)?;
    match settings.format.unwrap_or_default() {
        Format::Csv => fitted.write_csv(&mut out)?,
        Format::Text => {
            let rows: Vec<_> = fitted
                .coeffs()
                .iter()
                .zip(fitted.rho())
                .enumerate()
                .map(|(v, (c, r))| serde_json::json!({ "index": v, "c_v": c, "rho_v": r }))
                .collect();
            let doc = serde_json::json!({ "family": family.label(), "A": a, "m": dataset.len(), "coefficients": rows });
            serde_json::to_writer_pretty(&mut out, &doc).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(true)
}

fn read_points(path: Option<PathBuf>, inline: Option<String>) -> CliResult<Vec<Vec<f64>>> {
    if let Some(text) = inline {
        return text
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(parse_real_list)
            .collect();
    }
    let path = path.ok_or_else(|| CliError::Config("eval needs --points or --x".into()))?;
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .records()
        .map(|rec| {
            rec?.iter()
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("invalid coordinate `{t}`")))
                })
                .collect()
        })
        .collect()
}

fn run_eval(
    coeffs: PathBuf,
    points: Option<PathBuf>,
    x: Option<String>,
    settings: Settings,
) -> CliResult<bool> {
    let points = read_points(points, x)?;
    let dim = settings.dim.or(points.first().map(Vec::len)).unwrap_or(1);
    let family = family_from(&settings, dim)?;
    let a = bound_from(&settings)?;
    let fitted = EstimatorCoeffs::read_csv(
        BufReader::new(File::open(&coeffs)?),
        family,
        a,
        CoeffKind::Empirical,
    )?;
    let mut out = output(&settings.out)?;
    let values: Vec<f64> = points
        .iter()
        .map(|p| fitted.evaluate(p))
        .collect::<Result<_, _>>()?;
    match settings.format.unwrap_or_default() {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
            header.push("f_z".into());
            w.write_record(&header)?;
            for (p, v) in points.iter().zip(&values) {
                let mut rec: Vec<String> = p.iter().map(f64::to_string).collect();
                rec.push(v.to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Format::Text => {
            let rows: Vec<_> = points
                .iter()
                .zip(&values)
                .map(|(p, v)| serde_json::json!({ "x": p, "f_z": v }))
                .collect();
            serde_json::to_writer_pretty(&mut out, &rows).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(true)
}

fn run_sample(settings: Settings) -> CliResult<bool> {
    let name = settings
        .problem
        .clone()
        .unwrap_or_else(|| "lipschitz-1d".into());
    let mut problem = preset(&name).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(a) = settings.a {
        problem = problem
            .with_bound(a)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let m = match settings.m.as_deref() {
        Some([m]) => *m,
        _ => {
            return Err(CliError::Config(
                "sample takes a single sample size in --m".into(),
            ))
        }
    };
    let data = sample_dataset(
        &problem,
        m,
        settings.seed.unwrap_or(pou_cli::config::DEFAULT_SEED),
    )?;
    let mut out = output(&settings.out)?;
    data.write_csv(&mut out)?;
    out.flush()?;
    Ok(true)
}

fn run_experiment(kind: ExperimentKind, settings: Settings) -> CliResult<bool> {
    let config = ExperimentConfig::resolve(kind, settings)?;
    let report = pou_cli::with_threads(config.threads, || pou_cli::run(&config))??;
    let mut out = output(&config.out)?;
    report.write(config.format, &mut out)?;
    out.flush()?;
    if let Some(prefix) = &config.plot {
        report.write_gnuplot(prefix)?;
    }
    for c in &report.checks {
        eprintln!("{}: {:?} ({})", c.name, c.status, c.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(c) => c
            .settings()
            .and_then(|s| run_experiment(ExperimentKind::Validate, s)),
        Command::ExpVariance(c) => c
            .settings()
            .and_then(|s| run_experiment(ExperimentKind::ExpVariance, s)),
        Command::ExpRate(c) => c
            .settings()
            .and_then(|s| run_experiment(ExperimentKind::ExpRate, s)),
        Command::ExpTail(c) => c
            .settings()
            .and_then(|s| run_experiment(ExperimentKind::ExpTail, s)),
        Command::ExpBernstein(c) => c
            .settings()
            .and_then(|s| run_experiment(ExperimentKind::ExpBernstein, s)),
        Command::Oracle(c) => c
            .settings()
            .and_then(|s| run_experiment(ExperimentKind::Oracle, s)),
        Command::Fit { data, common } => common.settings().and_then(|s| run_fit(data, s)),
        Command::Eval {
            coeffs,
            points,
            x,
            common,
        } => common
            .settings()
            .and_then(|s| run_eval(coeffs, points, x, s)),
        Command::Sample(c) => c.settings().and_then(run_sample),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
