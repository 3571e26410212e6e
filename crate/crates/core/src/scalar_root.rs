//! Safeguarded bisection for strictly monotone residuals.
//!
//! Every equilibrium condition in this crate reduces to one scalar equation
//! `R(x) = 0` with `R` strictly increasing, so plain bisection with a sign
//! bracket is all we need. When the initial bracket does not straddle a sign
//! change it is replaced by `[−b, b]` for `b = 1, 2, 4, …` up to the
//! configured bound.

use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_BRACKET: f64 = 1e3;

/// Intervals in the coarse scan that sets [`RootResult::unique`].
const COARSE_SCAN_INTERVALS: usize = 128;
const MAX_BISECTIONS: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("residual is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("bracket collapsed at x = {x} with residual {residual:e} above tolerance")]
    Stalled { x: f64, residual: f64 },
    #[error("invalid root problem: {0}")]
    InvalidProblem(String),
}

/// A scalar equation together with its search settings.
pub struct RootProblem<F> {
    residual: F,
    bracket: (f64, f64),
    tolerance: f64,
    max_bracket: f64,
    trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootResult {
    pub root: f64,
    pub residual_at_root: f64,
    pub iterations: usize,
    pub bracket_expansions: usize,
    /// Sign-change bracket the bisection started from.
    pub bracket: (f64, f64),
    /// Coarse scan of the bracket found exactly one sign change.
    pub unique: bool,
    /// `(x, R(x))` for every bisection midpoint, when tracing is enabled.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<(f64, f64)>,
}

impl<F: Fn(f64) -> f64> RootProblem<F> {
    pub fn new(residual: F) -> Self {
        Self {
            residual,
            bracket: (-1.0, 1.0),
            tolerance: DEFAULT_TOLERANCE,
            max_bracket: DEFAULT_MAX_BRACKET,
            trace: false,
        }
    }

    pub fn bracket(mut self, lo: f64, hi: f64) -> Self {
        self.bracket = (lo, hi);
        self
    }

    pub fn tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn max_bracket(mut self, max_bracket: f64) -> Self {
        self.max_bracket = max_bracket;
        self
    }

    pub fn trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    pub fn solve(&self) -> Result<RootResult, RootError> {
        solve_monotone(self)
    }

    fn eval(&self, x: f64) -> Result<f64, RootError> {
        let r = (self.residual)(x);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(RootError::NonFinite { x })
        }
    }
}

fn straddles(a: f64, b: f64) -> bool {
    a == 0.0 || b == 0.0 || (a < 0.0) != (b < 0.0)
}

/// Bisection on a strictly monotone residual.
///
/// Returns the first midpoint (or bracket endpoint) whose residual magnitude
/// is within tolerance.
pub fn solve_monotone<F: Fn(f64) -> f64>(p: &RootProblem<F>) -> Result<RootResult, RootError> {
    let (lo0, hi0) = p.bracket;
    if !(p.tolerance > 0.0) {
        return Err(RootError::InvalidProblem(format!(
            "tolerance must be positive, got {}",
            p.tolerance
        )));
    }
    if !(lo0 < hi0) || !lo0.is_finite() || !hi0.is_finite() {
        return Err(RootError::InvalidProblem(format!(
            "bracket [{lo0}, {hi0}] is not an interval"
        )));
    }
    if !(p.max_bracket > 0.0) || !p.max_bracket.is_finite() {
        return Err(RootError::InvalidProblem(format!(
            "max bracket must be positive, got {}",
            p.max_bracket
        )));
    }

    let (mut lo, mut hi) = (lo0, hi0);
    let (mut r_lo, mut r_hi) = (p.eval(lo)?, p.eval(hi)?);
    let mut expansions = 0;
    if !straddles(r_lo, r_hi) {
        let mut b = 1.0_f64.min(p.max_bracket);
        loop {
            if (-b, b) != (lo0, hi0) {
                expansions += 1;
                lo = -b;
                hi = b;
                r_lo = p.eval(lo)?;
                r_hi = p.eval(hi)?;
                if straddles(r_lo, r_hi) {
                    break;
                }
            }
            if b >= p.max_bracket {
                return Err(RootError::NoSignChange { lo, hi });
            }
            b = (2.0 * b).min(p.max_bracket);
        }
    }
    let bracket = (lo, hi);
    let unique = uniqueness_scan(
        &p.residual,
        bracket,
        (hi - lo) / COARSE_SCAN_INTERVALS as f64,
    )
    .is_unique();
    let finish = |root: f64, residual: f64, iterations: usize, trace: Vec<(f64, f64)>| RootResult {
        root,
        residual_at_root: residual,
        iterations,
        bracket_expansions: expansions,
        bracket,
        unique,
        trace,
    };

    let mut trace = Vec::new();
    if r_lo.abs() <= p.tolerance {
        return Ok(finish(lo, r_lo, 0, trace));
    }
    if r_hi.abs() <= p.tolerance {
        return Ok(finish(hi, r_hi, 0, trace));
    }
    for iteration in 1..=MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        let r = p.eval(mid)?;
        if p.trace {
            trace.push((mid, r));
        }
        if r.abs() <= p.tolerance {
            return Ok(finish(mid, r, iteration, trace));
        }
        if mid <= lo || mid >= hi {
            return Err(RootError::Stalled {
                x: mid,
                residual: r,
            });
        }
        if (r < 0.0) == (r_lo < 0.0) {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
        }
    }
    Err(RootError::Stalled {
        x: lo + 0.5 * (hi - lo),
        residual: r_lo,
    })
}

/// Outcome of sampling a residual for sign changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum ScanOutcome {
    /// No sign change and no exact zero on the grid.
    NoRoot,
    Unique,
    Multiple {
        sign_changes: usize,
    },
}

impl ScanOutcome {
    pub fn is_unique(self) -> bool {
        self == ScanOutcome::Unique
    }

    /// True unless several sign changes were seen.
    pub fn at_most_one(self) -> bool {
        !matches!(self, ScanOutcome::Multiple { .. })
    }
}

/// Samples `residual` on `lo, lo + step, …, hi` and counts sign changes.
///
/// Exact zeros are skipped when counting; a grid with zeros but no sign
/// change counts as a single (touching) root.
pub fn uniqueness_scan(
    residual: impl Fn(f64) -> f64,
    bracket: (f64, f64),
    step: f64,
) -> ScanOutcome {
    let (lo, hi) = bracket;
    if !(step > 0.0) || !(hi > lo) {
        return ScanOutcome::NoRoot;
    }
    let n = ((hi - lo) / step).ceil() as usize;
    let mut last_sign: Option<bool> = None;
    let mut changes = 0;
    let mut zero_seen = false;
    for k in 0..=n {
        let x = if k == n { hi } else { lo + k as f64 * step };
        let r = residual(x);
        if r == 0.0 {
            zero_seen = true;
            continue;
        }
        if r.is_nan() {
            continue;
        }
        let negative = r < 0.0;
        if let Some(prev) = last_sign {
            if prev != negative {
                changes += 1;
            }
        }
        last_sign = Some(negative);
    }
    match changes {
        0 if zero_seen => ScanOutcome::Unique,
        0 => ScanOutcome::NoRoot,
        1 => ScanOutcome::Unique,
        n => ScanOutcome::Multiple { sign_changes: n },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shock_dist::ShockDistribution;

    /// Left end of the first sign change on a uniform grid.
    fn fine_scan(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        let mut prev = f(lo);
        for k in 1..=n {
            let x = lo + k as f64 * step;
            let r = f(x);
            if (r < 0.0) != (prev < 0.0) || r == 0.0 {
                return x - 0.5 * step;
            }
            prev = r;
        }
        panic!("no sign change");
    }

    #[test]
    fn motion_root_at_zero() {
        let n = ShockDistribution::standard_normal();
        let r = RootProblem::new(|x| n.motion(x)).solve().unwrap();
        assert_eq!(r.root, 0.0);
    }

    #[test]
    fn shifted_motion_matches_fine_scan() {
        let n = ShockDistribution::standard_normal();
        let f = |x: f64| n.motion(x) + 1.0;
        let r = RootProblem::new(f).solve().unwrap();
        let oracle = fine_scan(f, -1.0, 0.0, 1e-6);
        assert!((r.root - oracle).abs() < 1e-6);
        assert!((r.root + 0.325).abs() < 1e-3);
        assert!(r.residual_at_root.abs() <= DEFAULT_TOLERANCE);
        assert!(r.unique);
    }

    #[test]
    fn linear_root_found_by_expansion() {
        let r = RootProblem::new(|x| x - 2.0).solve().unwrap();
        assert_eq!(r.root, 2.0);
        assert_eq!(r.bracket_expansions, 1);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let err = RootProblem::new(|x: f64| x * x + 1.0)
            .max_bracket(16.0)
            .solve()
            .unwrap_err();
        assert_eq!(
            err,
            RootError::NoSignChange {
                lo: -16.0,
                hi: 16.0
            }
        );
    }

    #[test]
    fn non_finite_is_reported() {
        let err = RootProblem::new(|x: f64| if x > 0.5 { f64::NAN } else { x - 0.7 })
            .solve()
            .unwrap_err();
        assert!(matches!(err, RootError::NonFinite { .. }));
    }

    #[test]
    fn rejects_bad_problem() {
        assert!(matches!(
            RootProblem::new(|x| x).tolerance(0.0).solve(),
            Err(RootError::InvalidProblem(_))
        ));
        assert!(matches!(
            RootProblem::new(|x| x).bracket(1.0, -1.0).solve(),
            Err(RootError::InvalidProblem(_))
        ));
    }

    #[test]
    fn listing_tolerance_is_supported() {
        let n = ShockDistribution::standard_normal();
        let r = RootProblem::new(|x| n.motion(x) + 5.0)
            .bracket(-1e3, 1e3)
            .tolerance(1e-5)
            .solve()
            .unwrap();
        assert!(r.residual_at_root.abs() <= 1e-5);
        assert!((r.root + 1.178_431_9).abs() < 1e-5);
    }

    #[test]
    fn trace_records_midpoints() {
        let r = RootProblem::new(|x| x - 0.3).trace(true).solve().unwrap();
        assert_eq!(r.trace.len(), r.iterations);
        assert_eq!(r.trace.last().unwrap().0, r.root);
    }

    #[test]
    fn scan_examples() {
        let n = ShockDistribution::standard_normal();
        assert_eq!(
            uniqueness_scan(|x| n.motion(x) + 1.0, (-10.0, 10.0), 0.01),
            ScanOutcome::Unique
        );
        assert_eq!(
            uniqueness_scan(|x| x * x - 1.0, (-2.0, 2.0), 0.01),
            ScanOutcome::Multiple { sign_changes: 2 }
        );
        let flat = uniqueness_scan(|_| 1.0, (-2.0, 2.0), 0.01);
        assert_eq!(flat, ScanOutcome::NoRoot);
        assert!(flat.at_most_one() && !flat.is_unique());
    }
}
