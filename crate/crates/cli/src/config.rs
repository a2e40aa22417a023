//! Experiment configuration: list syntax, config files, defaults and hashing.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pou_core::partition::{make_dyadic, make_hat, PartitionFamily};
use pou_core::problems::preset;
use pou_core::RegressionProblem;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Validate,
    ExpVariance,
    ExpRate,
    ExpTail,
    ExpBernstein,
    Oracle,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::ExpVariance => "exp-variance",
            Self::ExpRate => "exp-rate",
            Self::ExpTail => "exp-tail",
            Self::ExpBernstein => "exp-bernstein",
            Self::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Dyadic,
    Hat,
    TensorHat,
}

impl FromStr for FamilyName {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "dyadic" => Ok(Self::Dyadic),
            "hat" => Ok(Self::Hat),
            "tensor-hat" => Ok(Self::TensorHat),
            other => Err(CliError::Config(format!(
                "unknown family `{other}` (expected dyadic, hat or tensor-hat)"
            ))),
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dyadic => "dyadic",
            Self::Hat => "hat",
            Self::TensorHat => "tensor-hat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            other => Err(CliError::Config(format!(
                "unknown format `{other}` (expected csv or text)"
            ))),
        }
    }
}

/// Parses one integer token: a decimal or `b^k`.
fn parse_count(token: &str) -> CliResult<usize> {
    let bad = || CliError::Config(format!("invalid integer `{token}`"));
    match token.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base.trim().parse().map_err(|_| bad())?;
            let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
            base.checked_pow(exp).ok_or_else(bad)
        }
        None => token.trim().parse().map_err(|_| bad()),
    }
}

fn power_of_two_exponent(token: &str) -> Option<u32> {
    let (base, exp) = token.split_once('^')?;
    (base.trim() == "2")
        .then(|| exp.trim().parse().ok())
        .flatten()
}

/// Parses a comma-separated integer list. Tokens are integers, `b^k`, or
/// inclusive ranges `a..b`; a range between two powers of two steps by
/// doubling, any other range steps by one.
pub fn parse_count_list(text: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token.split_once("..") {
            Some((lo, hi)) => {
                if let (Some(a), Some(b)) = (power_of_two_exponent(lo), power_of_two_exponent(hi)) {
                    for k in a..=b {
                        out.push(parse_count(&format!("2^{k}"))?);
                    }
                } else {
                    out.extend(parse_count(lo)?..=parse_count(hi)?);
                }
            }
            None => out.push(parse_count(token)?),
        }
    }
    Ok(out)
}

/// Parses a comma-separated list of reals.
pub fn parse_real_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| CliError::Config(format!("invalid number `{t}`")))
        })
        .collect()
}

/// Raw settings from flags or a config file; every field optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub problem: Option<String>,
    pub family: Option<FamilyName>,
    pub dim: Option<usize>,
    pub level: Option<u32>,
    pub knots: Option<usize>,
    pub m: Option<Vec<usize>>,
    pub n: Option<Vec<usize>>,
    pub eta: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub cell: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub a: Option<f64>,
    pub mc_points: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub plot: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($hi:ident, $lo:ident; $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Settings {
    /// Field-wise `self` over `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        merge_fields!(self, lower; problem, family, dim, level, knots, m, n, eta, eps, s, cell,
            replications, seed, a, mc_points, out, format, threads, plot)
    }

    /// Reads a flat TOML table whose keys mirror the long flags. List values
    /// may be arrays or strings in flag syntax.
    pub fn from_toml_str(text: &str) -> CliResult<Settings> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            CliError::Config(format!("config file: {}", e.message()))
        })?;
        let mut s = Settings::default();
        for (key, value) in table {
            let k = key.replace('_', "-");
            match k.as_str() {
                "problem" => s.problem = Some(toml_string(&k, &value)?),
                "family" => s.family = Some(toml_string(&k, &value)?.parse()?),
                "dim" => s.dim = Some(toml_count(&k, &value)?),
                "level" => s.level = Some(toml_count(&k, &value)? as u32),
                "knots" => s.knots = Some(toml_count(&k, &value)?),
                "m" => s.m = Some(toml_count_list(&k, &value)?),
                "n" => s.n = Some(toml_count_list(&k, &value)?),
                "eta" => s.eta = Some(toml_real_list(&k, &value)?),
                "eps" => s.eps = Some(toml_real_list(&k, &value)?),
                "s" => s.s = Some(toml_real(&k, &value)?),
                "cell" => s.cell = Some(toml_count(&k, &value)?),
                "replications" => s.replications = Some(toml_count(&k, &value)?),
                "seed" => s.seed = Some(toml_count(&k, &value)? as u64),
                "A" | "a" => s.a = Some(toml_real(&k, &value)?),
                "mc-points" => s.mc_points = Some(toml_count(&k, &value)?),
                "out" => s.out = Some(toml_string(&k, &value)?.into()),
                "format" => s.format = Some(toml_string(&k, &value)?.parse()?),
                "threads" => s.threads = Some(toml_count(&k, &value)?),
                "plot" => s.plot = Some(toml_string(&k, &value)?.into()),
                _ => {
                    return Err(CliError::Config(format!(
                        "config file: unknown key `{key}`"
                    )))
                }
            }
        }
        Ok(s)
    }
}

fn type_error(key: &str, expected: &str) -> CliError {
    CliError::Config(format!("config file: `{key}` must be {expected}"))
}

fn toml_string(key: &str, v: &toml::Value) -> CliResult<String> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| type_error(key, "a string"))
}

fn toml_count(key: &str, v: &toml::Value) -> CliResult<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        toml::Value::String(s) => parse_count(s),
        _ => Err(type_error(key, "a non-negative integer")),
    }
}

fn toml_real(key: &str, v: &toml::Value) -> CliResult<f64> {
    match v {
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::Float(x) => Ok(*x),
        _ => Err(type_error(key, "a number")),
    }
}

fn toml_count_list(key: &str, v: &toml::Value) -> CliResult<Vec<usize>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|i| toml_count(key, i)).collect(),
        toml::Value::String(s) => parse_count_list(s),
        other => Ok(vec![toml_count(key, other)?]),
    }
}

fn toml_real_list(key: &str, v: &toml::Value) -> CliResult<Vec<f64>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|i| toml_real(key, i)).collect(),
        toml::Value::String(s) => parse_real_list(s),
        other => Ok(vec![toml_real(key, other)?]),
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub problem: String,
    pub family: FamilyName,
    pub dim: usize,
    pub level: Option<u32>,
    pub knots: Option<usize>,
    pub m: Vec<usize>,
    pub n: Vec<usize>,
    pub eta: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub s: Option<f64>,
    pub cell: Option<usize>,
    pub replications: usize,
    pub seed: u64,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub mc_points: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub plot: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_MC_POINTS: usize = 100_000;

fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

impl ExperimentConfig {
    /// Fills unset fields with the defaults for `kind` and validates.
    pub fn resolve(kind: ExperimentKind, s: Settings) -> CliResult<Self> {
        use ExperimentKind::*;
        let default_problem = match kind {
            Oracle => "two-atom",
            _ => "lipschitz-1d",
        };
        let problem_name = s.problem.unwrap_or_else(|| default_problem.to_owned());
        let problem = preset(&problem_name).map_err(|e| CliError::Config(e.to_string()))?;
        let family = s.family.unwrap_or(FamilyName::Dyadic);
        let dim = s.dim.unwrap_or(match (kind, family) {
            (Validate, FamilyName::TensorHat) => 2,
            (Validate, FamilyName::Hat) => 1,
            (Validate, _) => 1,
            _ => problem.dim(),
        });
        let (default_m, default_r) = match kind {
            Validate => (vec![], 2),
            ExpVariance => (powers_of_two(8, 14), 2000),
            ExpRate => (powers_of_two(8, 16), 1000),
            ExpTail => (vec![4096], 10_000),
            ExpBernstein => (vec![1024], 10_000),
            Oracle => ((1..=4).collect(), 10_000),
        };
        let default_n = match kind {
            ExpVariance => vec![4, 16, 64],
            ExpTail if s.level.is_none() && s.knots.is_none() => vec![16],
            _ => vec![],
        };
        let level = match (kind, s.level, s.knots, family) {
            (ExpBernstein, None, None, FamilyName::Dyadic) if s.n.is_none() => Some(2),
            (Oracle, None, None, FamilyName::Dyadic) if s.n.is_none() => Some(1),
            (_, level, _, _) => level,
        };
        let knots = match (kind, s.knots, level, family) {
            (ExpBernstein | Oracle, None, None, FamilyName::Hat | FamilyName::TensorHat)
                if s.n.is_none() =>
            {
                Some(2)
            }
            (_, knots, _, _) => knots,
        };
        let config = ExperimentConfig {
            kind,
            problem: problem_name,
            family,
            dim,
            level,
            knots,
            m: s.m.unwrap_or(default_m),
            n: s.n.unwrap_or(default_n),
            eta: s.eta,
            eps: s.eps,
            s: s.s,
            cell: s.cell,
            replications: s.replications.unwrap_or(default_r),
            seed: s.seed.unwrap_or(DEFAULT_SEED),
            a: s.a,
            mc_points: s.mc_points.unwrap_or(DEFAULT_MC_POINTS),
            out: s.out,
            format: s.format.unwrap_or_default(),
            threads: s.threads,
            plot: s.plot,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> CliResult<()> {
        let err = |msg: String| Err(CliError::Config(msg));
        if self.kind != ExperimentKind::Validate {
            if self.replications < 2 {
                return err(format!(
                    "replications must be at least 2, got {}",
                    self.replications
                ));
            }
            check_grid("m", &self.m.iter().map(|&v| v as f64).collect::<Vec<_>>())?;
            if self.m.contains(&0) {
                return err("sample sizes in --m must be positive".into());
            }
        }
        if !self.n.is_empty() {
            check_grid("n", &self.n.iter().map(|&v| v as f64).collect::<Vec<_>>())?;
        }
        for (name, grid) in [("eta", &self.eta), ("eps", &self.eps)] {
            if let Some(g) = grid {
                check_grid(name, g)?;
                if g[0] <= 0.0 {
                    return err(format!("--{name} values must be positive"));
                }
            }
        }
        if let Some(s) = self.s {
            if !(s > 0.0 && s.is_finite()) {
                return err(format!("smoothness s must be positive, got {s}"));
            }
        }
        if self.dim == 0 {
            return err("dimension must be at least 1".into());
        }
        if self.level.is_some() && self.family != FamilyName::Dyadic {
            return err("--level applies to the dyadic family; use --knots for hats".into());
        }
        if self.knots.is_some() && self.family == FamilyName::Dyadic {
            return err("--knots applies to hat families; use --level for dyadic".into());
        }
        if self.family == FamilyName::Hat && self.dim != 1 {
            return err("the hat family is one-dimensional; use tensor-hat for d >= 2".into());
        }
        if self.mc_points < 2 {
            return err("--mc-points must be at least 2".into());
        }
        if self.threads == Some(0) {
            return err("--threads must be at least 1".into());
        }
        Ok(())
    }

    /// Regression problem with the `A` override applied.
    pub fn problem(&self) -> CliResult<RegressionProblem> {
        let p = preset(&self.problem).map_err(|e| CliError::Config(e.to_string()))?;
        if p.dim() != self.dim {
            return Err(CliError::Config(format!(
                "problem `{}` has dimension {}, but --dim is {}",
                self.problem,
                p.dim(),
                self.dim
            )));
        }
        match self.a {
            Some(a) => p.with_bound(a).map_err(|e| CliError::Config(e.to_string())),
            None => Ok(p),
        }
    }

    /// Family with exactly `size` functions in `self.dim` dimensions.
    pub fn family_of_size(&self, size: usize) -> CliResult<PartitionFamily> {
        let bad = || {
            CliError::Config(format!(
                "N = {size} is not an admissible {} size in d = {}",
                self.family, self.dim
            ))
        };
        match self.family {
            FamilyName::Dyadic => {
                let cells_per_axis = integer_root(size, self.dim).ok_or_else(bad)?;
                if !cells_per_axis.is_power_of_two() {
                    return Err(bad());
                }
                Ok(make_dyadic(self.dim, cells_per_axis.trailing_zeros())?)
            }
            FamilyName::Hat | FamilyName::TensorHat => {
                let k = integer_root(size, self.dim)
                    .filter(|&k| k >= 2)
                    .ok_or_else(bad)?;
                Ok(make_hat(self.dim, k)?)
            }
        }
    }

    /// The single family named by `--level`, `--knots` or a one-element `--n`.
    pub fn single_family(&self) -> CliResult<PartitionFamily> {
        if let Some(level) = self.level {
            return Ok(make_dyadic(self.dim, level)?);
        }
        if let Some(k) = self.knots {
            return Ok(make_hat(self.dim, k)?);
        }
        match self.n.as_slice() {
            [size] => self.family_of_size(*size),
            _ => Err(CliError::Config(
                "select one family with --level, --knots or a single --n".into(),
            )),
        }
    }

    /// Admissible size nearest to `target`; ties go to the smaller size.
    pub fn nearest_admissible(&self, target: f64) -> CliResult<PartitionFamily> {
        let d = self.dim as i32;
        let candidates: Vec<usize> = match self.family {
            FamilyName::Dyadic => {
                let l = (target.max(1.0).log2() / d as f64).floor() as u32;
                vec![
                    1usize << (l as usize * self.dim),
                    1usize << ((l as usize + 1) * self.dim),
                ]
            }
            FamilyName::Hat | FamilyName::TensorHat => {
                let k = target.max(1.0).powf(1.0 / d as f64).floor().max(2.0) as usize;
                let below = if k > 2 {
                    vec![(k - 1).pow(d as u32)]
                } else {
                    vec![]
                };
                below
                    .into_iter()
                    .chain([k.pow(d as u32), (k + 1).pow(d as u32)])
                    .collect()
            }
        };
        let best = candidates
            .into_iter()
            .min_by(|a, b| {
                let da = (*a as f64 - target).abs();
                let db = (*b as f64 - target).abs();
                da.total_cmp(&db).then(a.cmp(b))
            })
            .expect("candidate list is nonempty");
        self.family_of_size(best)
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON of the
    /// configuration, excluding output path, format, plot and thread count.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        Sha256::digest(json.as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn integer_root(n: usize, d: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&k| k.checked_pow(d as u32) == Some(n))
}

fn check_grid(name: &str, grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::Config(format!("--{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(format!(
            "--{name} grid must be strictly increasing"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_syntax() {
        assert_eq!(parse_count_list("2^8..2^10").unwrap(), vec![256, 512, 1024]);
        assert_eq!(parse_count_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_count_list("4, 16,64").unwrap(), vec![4, 16, 64]);
        assert_eq!(parse_count_list("3^2,2^3").unwrap(), vec![9, 8]);
        assert!(parse_count_list("2^x").is_err());
        assert_eq!(parse_real_list("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_real_list("a").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let c =
            ExperimentConfig::resolve(ExperimentKind::ExpVariance, Settings::default()).unwrap();
        assert_eq!(c.m, powers_of_two(8, 14));
        assert_eq!(c.n, vec![4, 16, 64]);
        assert_eq!(c.replications, 2000);
        let bad = Settings {
            m: Some(vec![8, 4]),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(ExperimentKind::ExpRate, bad).is_err());
        let bad = Settings {
            replications: Some(1),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(ExperimentKind::ExpRate, bad).is_err());
        let bad = Settings {
            problem: Some("nope".into()),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(ExperimentKind::ExpRate, bad).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = Settings::from_toml_str("m = \"2^4..2^6\"\nseed = 5\nmc_points = 10\nA = 2.0\n")
            .unwrap();
        assert_eq!(file.m, Some(vec![16, 32, 64]));
        let flags = Settings {
            seed: Some(9),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.mc_points, Some(10));
        assert_eq!(merged.a, Some(2.0));
        assert!(Settings::from_toml_str("bogus = 1").is_err());
        assert!(Settings::from_toml_str("seed = \"x\"").is_err());
    }

    #[test]
    fn hash_ignores_output_settings() {
        let a = ExperimentConfig::resolve(ExperimentKind::ExpTail, Settings::default()).unwrap();
        let b = ExperimentConfig::resolve(
            ExperimentKind::ExpTail,
            Settings {
                out: Some("x.csv".into()),
                format: Some(Format::Text),
                threads: Some(3),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::resolve(
            ExperimentKind::ExpTail,
            Settings {
                seed: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn nearest_admissible_sizes() {
        let c = ExperimentConfig::resolve(ExperimentKind::ExpRate, Settings::default()).unwrap();
        let sizes: Vec<usize> =
            c.m.iter()
                .map(|&m| {
                    c.nearest_admissible((m as f64).powf(1.0 / 3.0))
                        .unwrap()
                        .size()
                })
                .collect();
        assert_eq!(sizes, vec![8, 8, 8, 16, 16, 16, 32, 32, 32]);
        // 6 sits midway between 4 and 8
        assert_eq!(c.nearest_admissible(6.0).unwrap().size(), 4);
        let hats = ExperimentConfig {
            family: FamilyName::Hat,
            ..c.clone()
        };
        assert_eq!(hats.nearest_admissible(6.4).unwrap().size(), 6);
        assert_eq!(hats.nearest_admissible(1.0).unwrap().size(), 2);
        let tensor = ExperimentConfig {
            family: FamilyName::TensorHat,
            dim: 2,
            ..c
        };
        assert_eq!(tensor.nearest_admissible(20.0).unwrap().size(), 16);
    }

    #[test]
    fn family_sizes() {
        let c =
            ExperimentConfig::resolve(ExperimentKind::ExpVariance, Settings::default()).unwrap();
        assert_eq!(c.family_of_size(16).unwrap().size(), 16);
        assert!(c.family_of_size(12).is_err());
        let two_d = ExperimentConfig { dim: 2, ..c };
        assert!(two_d.family_of_size(8).is_err());
        assert_eq!(
            two_d.family_of_size(64).unwrap().dyadic_cells_per_axis(),
            Some(8)
        );
    }
}
