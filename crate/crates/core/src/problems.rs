//! Synthetic regression problems with bounded responses.
//!
//! A [`RegressionProblem`] couples a covariate distribution `rho_X`, a known
//! regression function `f_rho`, and a conditional law for `y` given `x` that
//! keeps `|y| <= A` almost surely. The only noise model is symmetric
//! two-point noise, `y = f(x) ± sigma(x)` with probability 1/2 each, so the
//! conditional mean is exactly `f(x)` and no truncation bias is introduced.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::function::{Evaluable, Target};
use crate::partition::{check_point, FamilyKind};
use crate::probe::ProbeSet;
use crate::rng::stream_rng;

/// Probe count for the `sup |f| + sigma <= A` construction check.
pub const BOUND_PROBES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub prob: f64,
}

/// The covariate distribution `rho_X` on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalMeasure {
    Uniform {
        dim: usize,
    },
    /// Independent `Beta(a, b)` coordinates.
    ProductBeta {
        dim: usize,
        a: f64,
        b: f64,
    },
    AtomicDiscrete {
        atoms: Vec<Atom>,
    },
}

impl MarginalMeasure {
    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(Self::Uniform { dim })
    }

    pub fn product_beta(dim: usize, a: f64, b: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta parameters must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self::ProductBeta { dim, a, b })
    }

    /// Discrete measure on finitely many atoms; probabilities must be
    /// positive and sum to one within `1e-12`.
    pub fn atomic(atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let Some(dim) = atoms.first().map(|a| a.0.len()) else {
            return Err(Error::InvalidParameter(
                "atomic measure needs at least one atom".into(),
            ));
        };
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        let mut total = 0.0;
        for (point, prob) in &atoms {
            check_point(point, dim)?;
            if !(*prob > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "atom probability must be positive, got {prob}"
                )));
            }
            total += prob;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self::AtomicDiscrete {
            atoms: atoms
                .into_iter()
                .map(|(point, prob)| Atom { point, prob })
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Uniform { dim } | Self::ProductBeta { dim, .. } => *dim,
            Self::AtomicDiscrete { atoms } => atoms[0].point.len(),
        }
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match self {
            Self::AtomicDiscrete { atoms } => Some(atoms),
            _ => None,
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Uniform { .. } => out.iter_mut().for_each(|o| *o = rng.random::<f64>()),
            Self::ProductBeta { a, b, .. } => {
                let beta = Beta::new(*a, *b).expect("validated beta parameters");
                out.iter_mut()
                    .for_each(|o| *o = beta.sample(rng).clamp(0.0, 1.0));
            }
            Self::AtomicDiscrete { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let chosen = atoms
                    .iter()
                    .find(|a| {
                        acc += a.prob;
                        u < acc
                    })
                    .unwrap_or_else(|| atoms.last().expect("nonempty atoms"));
                out.copy_from_slice(&chosen.point);
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Uniform { dim } => format!("uniform(d={dim})"),
            Self::ProductBeta { dim, a, b } => format!("beta({a},{b})^{dim}"),
            Self::AtomicDiscrete { atoms } => format!("atomic({} atoms)", atoms.len()),
        }
    }
}

/// Conditional law of `y` given `x`.
#[derive(Debug, Clone)]
pub enum Noise {
    Noiseless,
    /// `y = f(x) ± sigma(x)` with equal probability.
    TwoPoint {
        sigma: Target,
    },
}

impl Noise {
    pub fn two_point(dim: usize, sigma: f64) -> Self {
        Noise::TwoPoint {
            sigma: Target::constant(dim, sigma),
        }
    }

    fn sigma(&self, x: &[f64]) -> f64 {
        match self {
            Noise::Noiseless => 0.0,
            Noise::TwoPoint { sigma } => sigma.eval(x),
        }
    }
}

/// A bounded regression problem with known `f_rho`.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    name: String,
    measure: MarginalMeasure,
    truth: Target,
    noise: Noise,
    bound_a: f64,
    dyadic_smoothness: Option<f64>,
    hat_smoothness: Option<f64>,
}

impl RegressionProblem {
    /// Builds a problem after checking `sup |f| + sigma <= A` on probes
    /// (and on every atom for discrete measures).
    pub fn new(
        name: impl Into<String>,
        measure: MarginalMeasure,
        truth: Target,
        noise: Noise,
        bound_a: f64,
    ) -> Result<Self> {
        let problem = Self {
            name: name.into(),
            measure,
            truth,
            noise,
            bound_a,
            dyadic_smoothness: None,
            hat_smoothness: None,
        };
        problem.check()?;
        Ok(problem)
    }

    fn check(&self) -> Result<()> {
        let dim = self.measure.dim();
        if !(self.bound_a > 0.0 && self.bound_a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bound A must be positive, got {}",
                self.bound_a
            )));
        }
        if self.truth.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.truth.dim(),
            });
        }
        if let Noise::TwoPoint { sigma } = &self.noise {
            if sigma.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: sigma.dim(),
                });
            }
        }
        let probes = ProbeSet::new(dim, BOUND_PROBES, 0);
        let atoms = self.measure.atoms().unwrap_or(&[]);
        let points = probes.iter().chain(atoms.iter().map(|a| a.point.clone()));
        for x in points {
            let f = self.truth.eval(&x);
            let s = self.noise.sigma(&x);
            if !(s >= 0.0) || !f.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "invalid f or sigma at {x:?}: f = {f}, sigma = {s}"
                )));
            }
            if f.abs() + s > self.bound_a * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "|f(x)| + sigma(x) = {} exceeds A = {} at {x:?}",
                    f.abs() + s,
                    self.bound_a
                )));
            }
        }
        Ok(())
    }

    /// Smoothness order `s` of the truth relative to a family kind, i.e.
    /// `||f - Q f|| <= C N^-s`, when known.
    pub fn with_smoothness(mut self, dyadic: Option<f64>, hat: Option<f64>) -> Self {
        self.dyadic_smoothness = dyadic;
        self.hat_smoothness = hat;
        self
    }

    /// Same problem with a different response bound (re-checked).
    pub fn with_bound(mut self, bound_a: f64) -> Result<Self> {
        self.bound_a = bound_a;
        self.check()?;
        Ok(self)
    }

    pub fn smoothness(&self, kind: &FamilyKind) -> Option<f64> {
        match kind {
            FamilyKind::DyadicIndicator { .. } => self.dyadic_smoothness,
            FamilyKind::Hat1D { .. } | FamilyKind::TensorHat { .. } => self.hat_smoothness,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn measure(&self) -> &MarginalMeasure {
        &self.measure
    }

    pub fn truth(&self) -> &Target {
        &self.truth
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }

    pub fn bound_a(&self) -> f64 {
        self.bound_a
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    pub fn truth_value(&self, x: &[f64]) -> f64 {
        self.truth.eval(x)
    }

    pub fn sigma(&self, x: &[f64]) -> f64 {
        self.noise.sigma(x)
    }

    /// Support of `y | x` as `(value, probability)` pairs.
    pub fn response_support(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let f = self.truth.eval(x);
        match &self.noise {
            Noise::Noiseless => vec![(f, 1.0)],
            Noise::TwoPoint { sigma } => {
                let s = sigma.eval(x);
                vec![(self.clamp(f - s), 0.5), (self.clamp(f + s), 0.5)]
            }
        }
    }

    /// Draws `y | x`.
    pub fn sample_response<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        let f = self.truth.eval(x);
        match &self.noise {
            Noise::Noiseless => f,
            Noise::TwoPoint { sigma } => {
                let s = sigma.eval(x);
                if rng.random::<bool>() {
                    self.clamp(f + s)
                } else {
                    self.clamp(f - s)
                }
            }
        }
    }

    // |f| + sigma <= A holds exactly; this only absorbs rounding of the sum.
    fn clamp(&self, y: f64) -> f64 {
        y.clamp(-self.bound_a, self.bound_a)
    }
}

/// `m` observations `(x_j, y_j)` with `|y_j| <= A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<f64>,
    responses: Vec<f64>,
    bound_a: f64,
    seed: Option<(u64, u64)>,
}

impl Dataset {
    /// `points` is row-major, `dim` coordinates per sample.
    pub fn new(dim: usize, points: Vec<f64>, responses: Vec<f64>, bound_a: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if responses.is_empty() {
            return Err(Error::InvalidParameter(
                "a dataset needs at least one sample".into(),
            ));
        }
        if points.len() != dim * responses.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * responses.len(),
                got: points.len(),
            });
        }
        for x in points.chunks_exact(dim) {
            check_point(x, dim)?;
        }
        for (index, &y) in responses.iter().enumerate() {
            if !(y.abs() <= bound_a) {
                return Err(Error::ResponseOutOfBounds {
                    index,
                    y,
                    bound: bound_a,
                });
            }
        }
        Ok(Self {
            dim,
            points,
            responses,
            bound_a,
            seed: None,
        })
    }

    pub fn from_pairs(pairs: &[(Vec<f64>, f64)], bound_a: f64) -> Result<Self> {
        let dim = pairs.first().map_or(0, |p| p.0.len());
        let points = pairs.iter().flat_map(|p| p.0.iter().copied()).collect();
        let responses = pairs.iter().map(|p| p.1).collect();
        Self::new(dim, points, responses, bound_a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn bound_a(&self) -> f64 {
        self.bound_a
    }

    /// `(master seed, stream)` that produced the dataset, if sampled.
    pub fn seed(&self) -> Option<(u64, u64)> {
        self.seed
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.responses.iter().copied())
    }

    /// Samples reordered as `order[0], order[1], ...`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut points = Vec::with_capacity(self.points.len());
        let mut responses = Vec::with_capacity(self.len());
        for &j in order {
            points.extend_from_slice(self.point(j));
            responses.push(self.responses[j]);
        }
        Self {
            dim: self.dim,
            points,
            responses,
            bound_a: self.bound_a,
            seed: self.seed,
        }
    }

    /// CSV with header `x_1,...,x_d,y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (x, y) in self.iter() {
            let row: Vec<String> = x
                .iter()
                .chain(std::iter::once(&y))
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`Dataset::write_csv`]; the last column is `y`.
    pub fn read_csv<R: Read>(reader: R, bound_a: f64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let cols = r.headers()?.len();
        if cols < 2 {
            return Err(Error::InvalidParameter(
                "dataset CSV needs x columns and a y column".into(),
            ));
        }
        let dim = cols - 1;
        let mut points = Vec::new();
        let mut responses = Vec::new();
        for record in r.records() {
            let record = record?;
            for (i, field) in record.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("not a number: `{field}`")))?;
                if i < dim {
                    points.push(v);
                } else {
                    responses.push(v);
                }
            }
        }
        Self::new(dim, points, responses, bound_a)
    }
}

/// `m` i.i.d. draws from `problem`, using stream 0 of `seed`.
pub fn sample_dataset(problem: &RegressionProblem, m: usize, seed: u64) -> Result<Dataset> {
    let mut rng = stream_rng(seed, 0);
    let mut data = sample_dataset_with(problem, m, &mut rng)?;
    data.seed = Some((seed, 0));
    Ok(data)
}

/// `m` i.i.d. draws from `problem` using the caller's stream.
pub fn sample_dataset_with<R: Rng + ?Sized>(
    problem: &RegressionProblem,
    m: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample size m must be at least 1".into(),
        ));
    }
    let dim = problem.dim();
    let mut points = vec![0.0; m * dim];
    let mut responses = Vec::with_capacity(m);
    for x in points.chunks_exact_mut(dim) {
        problem.measure.sample_into(rng, x);
        responses.push(problem.sample_response(x, rng));
    }
    Ok(Dataset {
        dim,
        points,
        responses,
        bound_a: problem.bound_a,
        seed: None,
    })
}

pub(crate) fn sample_dataset_stream(
    problem: &RegressionProblem,
    m: usize,
    seed: u64,
    stream: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Dataset> {
    let mut data = sample_dataset_with(problem, m, rng)?;
    data.seed = Some((seed, stream));
    Ok(data)
}

fn step(x: &[f64], low: f64, high: f64) -> f64 {
    if x[0] < 0.5 {
        low
    } else {
        high
    }
}

/// The named preset catalog.
pub fn builtin_problems() -> Vec<RegressionProblem> {
    let halves = |p: f64| vec![(vec![0.25], p), (vec![0.75], 1.0 - p)];
    vec![
        RegressionProblem::new(
            "lipschitz-1d",
            MarginalMeasure::Uniform { dim: 1 },
            Target::affine(-0.5, vec![1.0]),
            Noise::two_point(1, 0.25),
            1.0,
        )
        .expect("valid preset")
        .with_smoothness(Some(1.0), None),
        RegressionProblem::new(
            "smooth-2d",
            MarginalMeasure::Uniform { dim: 2 },
            Target::custom(2, "sin(pi x1) sin(pi x2) / 2", |x| {
                0.5 * (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()
            }),
            Noise::two_point(2, 0.25),
            1.0,
        )
        .expect("valid preset")
        .with_smoothness(Some(0.5), None),
        RegressionProblem::new(
            "beta-skew-1d",
            MarginalMeasure::ProductBeta {
                dim: 1,
                a: 2.0,
                b: 5.0,
            },
            Target::affine(-0.5, vec![1.0]),
            Noise::two_point(1, 0.25),
            1.0,
        )
        .expect("valid preset")
        .with_smoothness(Some(1.0), None),
        RegressionProblem::new(
            "two-atom",
            MarginalMeasure::atomic(halves(0.5)).expect("valid atoms"),
            Target::custom(1, "0 below 1/2, 1 above", |x| step(x, 0.0, 1.0)),
            Noise::Noiseless,
            1.0,
        )
        .expect("valid preset"),
        RegressionProblem::new(
            "two-atom-noisy",
            MarginalMeasure::atomic(halves(0.3)).expect("valid atoms"),
            Target::custom(1, "-1/4 below 1/2, 1/2 above", |x| step(x, -0.25, 0.5)),
            Noise::two_point(1, 0.25),
            1.0,
        )
        .expect("valid preset"),
        RegressionProblem::new(
            "two-atom-constant",
            MarginalMeasure::atomic(halves(0.5)).expect("valid atoms"),
            Target::constant(1, 0.5),
            Noise::Noiseless,
            1.0,
        )
        .expect("valid preset"),
        RegressionProblem::new(
            "constant-1d",
            MarginalMeasure::Uniform { dim: 1 },
            Target::constant(1, 0.5),
            Noise::Noiseless,
            1.0,
        )
        .expect("valid preset"),
    ]
}

pub fn preset(name: &str) -> Result<RegressionProblem> {
    builtin_problems()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

pub fn preset_names() -> Vec<String> {
    builtin_problems().into_iter().map(|p| p.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_constant_responses() {
        let p = RegressionProblem::new(
            "c",
            MarginalMeasure::uniform(1).unwrap(),
            Target::constant(1, 0.5),
            Noise::Noiseless,
            1.0,
        )
        .unwrap();
        let d = sample_dataset(&p, 3, 1).unwrap();
        assert_eq!(d.responses(), &[0.5, 0.5, 0.5]);
        assert_eq!(d.seed(), Some((1, 0)));
    }

    #[test]
    fn two_point_support() {
        let p = RegressionProblem::new(
            "tp",
            MarginalMeasure::uniform(1).unwrap(),
            Target::constant(1, 0.0),
            Noise::two_point(1, 0.5),
            1.0,
        )
        .unwrap();
        let d = sample_dataset(&p, 1000, 2).unwrap();
        assert!(d.responses().iter().all(|&y| y == 0.5 || y == -0.5));
        let plus = d.responses().iter().filter(|&&y| y > 0.0).count();
        assert!((400..600).contains(&plus));
    }

    #[test]
    fn atomic_draws_hit_atoms() {
        let m = MarginalMeasure::atomic(vec![(vec![0.25], 0.3), (vec![0.75], 0.7)]).unwrap();
        let p = RegressionProblem::new("a", m, Target::constant(1, 0.0), Noise::Noiseless, 1.0)
            .unwrap();
        let d = sample_dataset(&p, 500, 4).unwrap();
        assert!(d.iter().all(|(x, _)| x[0] == 0.25 || x[0] == 0.75));
    }

    #[test]
    fn atomic_rejects_bad_probabilities() {
        assert!(MarginalMeasure::atomic(vec![(vec![0.25], 0.3), (vec![0.75], 0.6)]).is_err());
        assert!(MarginalMeasure::atomic(vec![(vec![0.25], 0.0), (vec![0.75], 1.0)]).is_err());
        assert!(MarginalMeasure::atomic(vec![(vec![1.25], 1.0)]).is_err());
        assert!(MarginalMeasure::atomic(vec![]).is_err());
    }

    #[test]
    fn construction_rejects_unbounded_truth() {
        let r = RegressionProblem::new(
            "bad",
            MarginalMeasure::uniform(1).unwrap(),
            Target::affine(0.0, vec![1.0]),
            Noise::two_point(1, 0.25),
            1.0,
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
        assert!(preset("lipschitz-1d").unwrap().with_bound(0.7).is_err());
        assert!(preset("lipschitz-1d").unwrap().with_bound(2.0).is_ok());
    }

    #[test]
    fn preset_catalog() {
        let names = preset_names();
        for required in ["lipschitz-1d", "smooth-2d", "two-atom", "beta-skew-1d"] {
            assert!(names.iter().any(|n| n == required), "missing {required}");
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
        let lip = preset("lipschitz-1d").unwrap();
        assert_eq!(lip.truth().eval(&[0.5]), 0.0);
        let sup = ProbeSet::new(1, 10_000, 0)
            .iter()
            .map(|x| lip.truth().eval(&x).abs() + lip.sigma(&x))
            .fold(0.0, f64::max);
        assert_eq!(sup, 0.75);
        assert_eq!(
            lip.smoothness(&FamilyKind::DyadicIndicator { level: 3 }),
            Some(1.0)
        );
        assert_eq!(lip.smoothness(&FamilyKind::Hat1D { knots: 3 }), None);
    }

    #[test]
    fn seed_determinism() {
        let p = preset("smooth-2d").unwrap();
        let a = sample_dataset(&p, 257, 11).unwrap();
        let b = sample_dataset(&p, 257, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&p, 257, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn responses_are_bounded_for_every_preset() {
        for p in builtin_problems() {
            let d = sample_dataset(&p, 5000, 8).unwrap();
            assert!(
                d.responses().iter().all(|y| y.abs() <= p.bound_a()),
                "{}",
                p.name()
            );
        }
    }

    #[test]
    fn conditional_mean_matches_truth() {
        let p = preset("smooth-2d").unwrap();
        let x = [0.3, 0.8];
        let mut rng = stream_rng(5, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| p.sample_response(&x, &mut rng)).sum::<f64>() / n as f64;
        let tol = 4.0 * p.sigma(&x) / (n as f64).sqrt();
        assert!((mean - p.truth().eval(&x)).abs() <= tol);
    }

    #[test]
    fn uniform_marginal_passes_ks() {
        let p = preset("lipschitz-1d").unwrap();
        let d = sample_dataset(&p, 100_000, 21).unwrap();
        let mut xs: Vec<f64> = d.iter().map(|(x, _)| x[0]).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn dataset_validation_and_csv() {
        assert!(matches!(
            Dataset::from_pairs(&[(vec![0.2], 1.5)], 1.0),
            Err(Error::ResponseOutOfBounds { .. })
        ));
        assert!(matches!(
            Dataset::from_pairs(&[(vec![1.2], 0.5)], 1.0),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(Dataset::from_pairs(&[], 1.0).is_err());

        let d = sample_dataset(&preset("smooth-2d").unwrap(), 20, 3).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x_1,x_2,y\n"));
        let back = Dataset::read_csv(buf.as_slice(), 1.0).unwrap();
        assert_eq!(back.len(), 20);
        assert_eq!(back.responses(), d.responses());
        assert_eq!(back.point(7), d.point(7));
    }
}
