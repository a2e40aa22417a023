//! Experiment reports and their CSV, JSON and gnuplot renderings.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::error::CliResult;
use crate::fit::RateFit;

/// Version string stamped on every row.
pub const VERSION: &str = concat!("pou-", env!("CARGO_PKG_VERSION"));

/// One report cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Real(f64),
    Text(String),
    Flag(bool),
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Flag(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_owned())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) if *v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e12) => {
                write!(f, "{v:e}")
            }
            Value::Real(v) => write!(f, "{v}"),
            Value::Text(v) => f.write_str(v),
            Value::Flag(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(v) => s.serialize_u64(*v),
            Value::Real(v) => s.serialize_f64(*v),
            Value::Text(v) => s.serialize_str(v),
            Value::Flag(v) => s.serialize_bool(*v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// A named acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        let status = if passed { Status::Pass } else { Status::Fail };
        Check {
            name: name.to_owned(),
            status,
            detail: detail.into(),
        }
    }

    pub fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_owned(),
            status: Status::Skipped,
            detail: detail.into(),
        }
    }
}

/// A fitted line together with the slope it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub name: String,
    pub x: String,
    pub y: String,
    pub target_slope: Option<f64>,
    pub fit: RateFit,
}

/// Which columns a gnuplot script should draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub log_x: bool,
    pub log_y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub fits: Vec<FitSummary>,
    pub checks: Vec<Check>,
    pub plot: Option<PlotSpec>,
}

struct Row<'a>(&'a [String], &'a [Value]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Report {
    pub fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        Report {
            experiment: config.kind.name().to_owned(),
            config_hash: config.hash(),
            seed: config.seed,
            version: VERSION.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            plot: None,
        }
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column `name` of every row.
    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Real-valued column; integers are widened.
    pub fn reals(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .map(|v| match v {
                Value::Real(x) => Some(*x),
                Value::Int(x) => Some(*x as f64),
                _ => None,
            })
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> CliResult<()> {
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = self.columns.clone();
            header.extend(["config_hash", "seed", "version"].map(String::from));
            w.write_record(&header)?;
            let seed = self.seed.to_string();
            for row in &self.rows {
                let mut record: Vec<String> = row.iter().map(Value::to_string).collect();
                record.extend([self.config_hash.clone(), seed.clone(), self.version.clone()]);
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        for f in &self.fits {
            write!(
                out,
                "# fit {}: log-slope of {} against {} = {}, intercept = {}, r_squared = {}",
                f.name, f.y, f.x, f.fit.slope, f.fit.intercept, f.fit.r_squared
            )?;
            if let Some(t) = f.target_slope {
                write!(out, ", target = {t}")?;
            }
            writeln!(out)?;
        }
        for c in &self.checks {
            writeln!(out, "# check {}: {:?} ({})", c.name, c.status, c.detail)?;
        }
        Ok(())
    }

    /// JSON with rows keyed by column name.
    pub fn write_text<W: Write>(&self, mut out: W) -> CliResult<()> {
        #[derive(Serialize)]
        struct View<'a> {
            experiment: &'a str,
            config_hash: &'a str,
            seed: u64,
            version: &'a str,
            passed: bool,
            rows: Vec<Row<'a>>,
            fits: &'a [FitSummary],
            checks: &'a [Check],
        }
        let view = View {
            experiment: &self.experiment,
            config_hash: &self.config_hash,
            seed: self.seed,
            version: &self.version,
            passed: self.passed(),
            rows: self.rows.iter().map(|r| Row(&self.columns, r)).collect(),
            fits: &self.fits,
            checks: &self.checks,
        };
        serde_json::to_writer_pretty(&mut out, &view).map_err(std::io::Error::from)?;
        writeln!(out)?;
        Ok(())
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> CliResult<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Text => self.write_text(out),
        }
    }

    pub fn to_string(&self, format: Format) -> String {
        let mut buf = Vec::new();
        self.write(format, &mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("reports are UTF-8")
    }

    /// Writes `<prefix>.dat` (numeric columns, whitespace separated) and
    /// `<prefix>.gp`, a gnuplot script drawing the columns named in `plot`.
    pub fn write_gnuplot(&self, prefix: &Path) -> CliResult<()> {
        let numeric: Vec<usize> = (0..self.columns.len())
            .filter(|&i| {
                self.rows
                    .iter()
                    .all(|r| matches!(r[i], Value::Int(_) | Value::Real(_)))
            })
            .collect();
        let data_path = prefix.with_extension("dat");
        let mut dat = std::fs::File::create(&data_path)?;
        let names: Vec<&str> = numeric.iter().map(|&i| self.columns[i].as_str()).collect();
        writeln!(dat, "# {}", names.join(" "))?;
        for row in &self.rows {
            let cells: Vec<String> = numeric.iter().map(|&i| row[i].to_string()).collect();
            writeln!(dat, "{}", cells.join(" "))?;
        }

        let mut gp = std::fs::File::create(prefix.with_extension("gp"))?;
        let file_name = data_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        writeln!(gp, "set title '{} ({})'", self.experiment, self.config_hash)?;
        if let Some(spec) = &self.plot {
            let col = |name: &str| names.iter().position(|c| *c == name).map(|i| i + 1);
            if let (Some(x), Some(y)) = (col(&spec.x), col(&spec.y)) {
                if spec.log_x {
                    writeln!(gp, "set logscale x")?;
                }
                if spec.log_y {
                    writeln!(gp, "set logscale y")?;
                }
                writeln!(gp, "set xlabel '{}'\nset ylabel '{}'", spec.x, spec.y)?;
                writeln!(
                    gp,
                    "plot '{file_name}' using {x}:{y} with linespoints title '{}'",
                    spec.y
                )?;
                return Ok(());
            }
        }
        writeln!(gp, "plot '{file_name}' using 1:2 with linespoints")?;
        Ok(())
    }
}
