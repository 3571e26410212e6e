//! Preference-shock distributions and the derived pricing functions.
//!
//! The relative preference `ξ` for one seller over the other is drawn from a
//! symmetric law `F` with density `f`. Every solver in the crate only needs a
//! handful of compositions of `F` and `f`:
//!
//! * `markup(x) = (1 − F(x)) / f(x)`, the inverse demand elasticity,
//! * `static_profit(x) = (1 − F(x))² / f(x)`, the per-period equilibrium profit `H`,
//! * `motion(x) = x + (2F(x) − 1) / f(x)`, the price-gap map `K`.
//!
//! For the normal law the right tail of `markup` is evaluated through the
//! scaled complementary error function, so the Mills ratio keeps full
//! relative precision far past the point where `1 − F` underflows.

use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// Densities are floored here before any division.
pub const PDF_FLOOR: f64 = 1e-300;

/// `|K|` beyond this is reported as out of range by [`ShockDistribution::motion_checked`].
pub const MOTION_LIMIT: f64 = 1e12;

/// Tolerance for raw-table asymmetry in [`ShockDistribution::validate`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

const MIN_TABLE_ROWS: usize = 16;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_PI_OVER_2: f64 = 1.253_314_137_315_500_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockKind {
    StandardNormal,
    StandardLogistic,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Normal,
    Logistic,
    Tabulated(Box<Table>),
}

/// A symmetric preference-shock law. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockDistribution {
    law: Law,
}

/// A value that saturates at a bound instead of overflowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarded {
    pub value: f64,
    pub out_of_range: bool,
}

impl ShockDistribution {
    pub fn standard_normal() -> Self {
        Self { law: Law::Normal }
    }

    pub fn standard_logistic() -> Self {
        Self { law: Law::Logistic }
    }

    /// Builds a tabulated law from `(x, density)` support points.
    ///
    /// The table is renormalized to unit mass and symmetrized by averaging
    /// `f(x)` with `f(−x)` on the union grid `{x} ∪ {−x}`. The raw
    /// (normalized) table is kept so that [`validate`](Self::validate) can
    /// still report asymmetric input.
    pub fn tabulated(xs: &[f64], densities: &[f64]) -> Result<Self> {
        Table::new(xs, densities).map(|t| Self {
            law: Law::Tabulated(Box::new(t)),
        })
    }

    /// Reads a two-column `x,density` CSV with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::InvalidTable(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "density" {
            return Err(Error::InvalidTable(format!(
                "expected header `x,density`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidTable(e.to_string()))?;
            let parse = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidTable(format!(
                            "row {}: unparsable column {}",
                            line + 2,
                            k + 1
                        ))
                    })
            };
            xs.push(parse(0)?);
            fs.push(parse(1)?);
        }
        Self::tabulated(&xs, &fs)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> std::io::Result<Result<Self>> {
        let file = std::fs::File::open(path)?;
        Ok(Self::from_csv_reader(std::io::BufReader::new(file)))
    }

    pub fn kind(&self) -> ShockKind {
        match self.law {
            Law::Normal => ShockKind::StandardNormal,
            Law::Logistic => ShockKind::StandardLogistic,
            Law::Tabulated(_) => ShockKind::Tabulated,
        }
    }

    /// Closed support; infinite for the built-in laws.
    pub fn support(&self) -> (f64, f64) {
        match &self.law {
            Law::Tabulated(t) => t.support(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `F(x)`. Saturates to 0 or 1 outside a tabulated support.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.law {
            Law::Normal => 0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2),
            Law::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Law::Tabulated(t) => t.cdf(x),
        }
    }

    /// `f(x)`, floored at [`PDF_FLOOR`].
    pub fn pdf(&self, x: f64) -> f64 {
        let raw = match &self.law {
            Law::Normal => FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
            Law::Logistic => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Law::Tabulated(t) => t.pdf(x),
        };
        raw.max(PDF_FLOOR)
    }

    /// Inverse price elasticity `(1 − F(x)) / f(x)`.
    pub fn markup(&self, x: f64) -> f64 {
        match &self.law {
            Law::Normal => {
                if x >= 0.0 {
                    SQRT_PI_OVER_2 * erfcx(x * std::f64::consts::FRAC_1_SQRT_2)
                } else {
                    self.cdf(-x) / self.pdf(x)
                }
            }
            Law::Logistic => 1.0 + clamp_exp(-x),
            Law::Tabulated(t) => t.survival(x) / self.pdf(x),
        }
    }

    /// `(2F(x) − 1) / f(x)`; odd in `x`.
    pub fn odd_ratio(&self, x: f64) -> f64 {
        match &self.law {
            Law::Normal => libm::erf(x * std::f64::consts::FRAC_1_SQRT_2) / self.pdf(x),
            Law::Logistic => clamp_exp(x) - clamp_exp(-x),
            Law::Tabulated(_) => (2.0 * self.cdf(x) - 1.0) / self.pdf(x),
        }
    }

    /// Static equilibrium profit `H(x) = (1 − F(x))² / f(x)`.
    pub fn static_profit(&self, x: f64) -> f64 {
        match &self.law {
            Law::Logistic => clamp_exp(-x),
            _ => {
                let m = self.markup(x);
                m * m * self.pdf(x)
            }
        }
    }

    /// `[(1 − F(x))² + F(x)²] / f(x)`, the static part of the average price.
    pub fn split_profit(&self, x: f64) -> f64 {
        self.static_profit(x) + self.static_profit(-x)
    }

    /// Price-gap map `K(x) = x + (2F(x) − 1) / f(x)`, unguarded.
    pub fn motion(&self, x: f64) -> f64 {
        x + self.odd_ratio(x)
    }

    /// `K(x)` saturated at `±MOTION_LIMIT` with an out-of-range flag.
    pub fn motion_checked(&self, x: f64) -> Guarded {
        let k = self.motion(x);
        if k.abs() > MOTION_LIMIT || k.is_nan() {
            Guarded {
                value: MOTION_LIMIT.copysign(k),
                out_of_range: true,
            }
        } else {
            Guarded {
                value: k,
                out_of_range: false,
            }
        }
    }

    /// Draws one shock `ξ ~ F`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            Law::Normal => rng.sample(StandardNormal),
            Law::Logistic => {
                let u: f64 = rng.random();
                // u in [0, 1); ln(0) maps to -inf which the comparison handles
                (u / (1.0 - u)).ln()
            }
            Law::Tabulated(t) => t.quantile(rng.random()),
        }
    }

    /// Checks symmetry, positivity, unimodality and the monotone hazard rate
    /// on the canonical grid `[−8, 8]` with step `0.01`.
    ///
    /// Tabulated laws are checked only at grid points strictly inside their
    /// support; their raw (pre-symmetrization) table is checked for symmetry
    /// at each support point.
    pub fn validate(&self) -> Vec<Violation> {
        let mut found = ViolationLog::default();
        let (lo, hi) = self.support();
        if let Law::Tabulated(t) = &self.law {
            for (&x, &f) in t.raw_xs.iter().zip(&t.raw_fs) {
                let mirror = interpolate(&t.raw_xs, &t.raw_fs, -x);
                if (f - mirror).abs() > SYMMETRY_TOLERANCE {
                    found.record(
                        ViolationKind::Symmetry,
                        x,
                        format!("f({x}) = {f} but f({}) = {mirror}", -x),
                    );
                }
            }
        }
        let grid: Vec<f64> = canonical_grid().filter(|&x| x > lo && x < hi).collect();
        for &x in &grid {
            let (a, b) = (self.pdf(x), self.pdf(-x));
            if (a - b).abs() > 1e-9 {
                found.record(
                    ViolationKind::Symmetry,
                    x,
                    format!("f({x}) = {a} but f({}) = {b}", -x),
                );
            }
            if a <= PDF_FLOOR {
                found.record(ViolationKind::Positivity, x, format!("f({x}) = {a}"));
            }
        }
        for pair in grid.windows(2) {
            let (x0, x1) = (pair[0], pair[1]);
            let (f0, f1) = (self.pdf(x0), self.pdf(x1));
            if (x1 <= 0.0 && f1 < f0) || (x0 >= 0.0 && f1 > f0) {
                found.record(
                    ViolationKind::Unimodality,
                    x1,
                    format!("f({x0}) = {f0}, f({x1}) = {f1}"),
                );
            }
            let (h0, h1) = (self.markup(-x0), self.markup(-x1));
            if h1 <= h0 {
                found.record(
                    ViolationKind::HazardRate,
                    x1,
                    format!("F/f({x0}) = {h0}, F/f({x1}) = {h1}"),
                );
            }
        }
        found.into_vec()
    }
}

impl fmt::Display for ShockDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ShockKind::StandardNormal => f.write_str("normal"),
            ShockKind::StandardLogistic => f.write_str("logistic"),
            ShockKind::Tabulated => f.write_str("tabulated"),
        }
    }
}

/// The canonical validation grid `x_k = −8 + 0.01·k`, `k = 0..=1600`.
pub fn canonical_grid() -> impl Iterator<Item = f64> {
    (0..=1600).map(|k| (k as f64 - 800.0) / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Symmetry,
    Positivity,
    Unimodality,
    HazardRate,
}

/// First offending point of one assumption, with how often it failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub x: f64,
    pub occurrences: usize,
    pub detail: String,
}

#[derive(Default)]
struct ViolationLog(Vec<Violation>);

impl ViolationLog {
    fn record(&mut self, kind: ViolationKind, x: f64, detail: String) {
        match self.0.iter_mut().find(|v| v.kind == kind) {
            Some(v) => v.occurrences += 1,
            None => self.0.push(Violation {
                kind,
                x,
                occurrences: 1,
                detail,
            }),
        }
    }

    fn into_vec(self) -> Vec<Violation> {
        self.0
    }
}

fn clamp_exp(x: f64) -> f64 {
    x.clamp(-690.0, 690.0).exp()
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 4.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // Laplace continued fraction, evaluated bottom-up.
    let mut t = x;
    for n in (1..=80).rev() {
        t = x + 0.5 * n as f64 / t;
    }
    1.0 / (std::f64::consts::PI.sqrt() * t)
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    /// Symmetric ascending grid.
    xs: Vec<f64>,
    fs: Vec<f64>,
    /// Cumulative mass at each node.
    cum: Vec<f64>,
    raw_xs: Vec<f64>,
    raw_fs: Vec<f64>,
}

impl Table {
    fn new(xs: &[f64], fs: &[f64]) -> Result<Self> {
        if xs.len() != fs.len() {
            return Err(Error::InvalidTable(
                "x and density columns differ in length".into(),
            ));
        }
        if xs.len() < MIN_TABLE_ROWS {
            return Err(Error::InvalidTable(format!(
                "need at least {MIN_TABLE_ROWS} rows, got {}",
                xs.len()
            )));
        }
        if xs.iter().chain(fs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("non-finite entry".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTable("x must be strictly increasing".into()));
        }
        if fs.iter().any(|&f| f < 0.0) {
            return Err(Error::InvalidTable("negative density".into()));
        }
        let mass = trapezoid(xs, fs);
        if mass <= 0.0 {
            return Err(Error::InvalidTable("density has zero mass".into()));
        }
        let raw_xs = xs.to_vec();
        let raw_fs: Vec<f64> = fs.iter().map(|f| f / mass).collect();

        let mut abs: Vec<f64> = xs.iter().map(|x| x.abs()).chain([0.0]).collect();
        abs.sort_by(f64::total_cmp);
        abs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        let half: Vec<f64> = abs
            .iter()
            .map(|&a| 0.5 * (interpolate(&raw_xs, &raw_fs, a) + interpolate(&raw_xs, &raw_fs, -a)))
            .collect();
        let sym_xs: Vec<f64> = abs
            .iter()
            .rev()
            .map(|a| -a)
            .chain(abs[1..].iter().copied())
            .collect();
        let mut sym_fs: Vec<f64> = half.iter().rev().chain(half[1..].iter()).copied().collect();

        // scale so the left half carries exactly one half of the mass
        let mid = abs.len() - 1;
        let left = trapezoid(&sym_xs[..=mid], &sym_fs[..=mid]);
        if left <= 0.0 {
            return Err(Error::InvalidTable(
                "symmetrized density has zero mass".into(),
            ));
        }
        for f in &mut sym_fs {
            *f *= 0.5 / left;
        }
        let mut cum = Vec::with_capacity(sym_xs.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for k in 1..sym_xs.len() {
            acc += 0.5 * (sym_fs[k] + sym_fs[k - 1]) * (sym_xs[k] - sym_xs[k - 1]);
            cum.push(acc);
        }
        Ok(Self {
            xs: sym_xs,
            fs: sym_fs,
            cum,
            raw_xs,
            raw_fs,
        })
    }

    fn support(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn pdf(&self, x: f64) -> f64 {
        interpolate(&self.xs, &self.fs, -x.abs())
    }

    fn cdf(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0 - self.left_cdf(-x)
        } else {
            self.left_cdf(x)
        }
    }

    /// `1 − F(x)` without cancellation in the right tail.
    fn survival(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.left_cdf(-x)
        } else {
            1.0 - self.left_cdf(x)
        }
    }

    /// Exact integral of the piecewise-linear density up to `x ≤ 0`.
    fn left_cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let k = self.xs.partition_point(|&g| g <= x) - 1;
        if k + 1 >= self.xs.len() {
            return self.cum[k];
        }
        let h = self.xs[k + 1] - self.xs[k];
        let t = x - self.xs[k];
        self.cum[k] + self.fs[k] * t + (self.fs[k + 1] - self.fs[k]) * t * t / (2.0 * h)
    }

    fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

fn trapezoid(xs: &[f64], fs: &[f64]) -> f64 {
    xs.windows(2)
        .zip(fs.windows(2))
        .map(|(x, f)| 0.5 * (f[0] + f[1]) * (x[1] - x[0]))
        .sum()
}

/// Linear interpolation; zero outside `[xs[0], xs[n-1]]`.
fn interpolate(xs: &[f64], fs: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    let k = xs.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2);
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    fs[k] + t * (fs[k + 1] - fs[k])
}
