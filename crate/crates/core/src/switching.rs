//! Insider/outsider pricing with a switching cost.
//!
//! The buyer is locked in to the insider (state 1); buying from the outsider
//! (state 0) costs `s`. With `x = p1 − p0 − s` the outsider sells with
//! probability `F(x)`, and the equilibrium gap solves
//!
//! ```text
//! x + (2F(x) − 1) / f(x) + s = 0,
//! ```
//!
//! which has a unique root because the left side is strictly increasing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lbd::{check_delta, SolverConfig};
use crate::shock_dist::ShockDistribution;

pub const MIN_SWEEP_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingParams {
    s: f64,
    delta: f64,
    dist: ShockDistribution,
}

impl SwitchingParams {
    pub fn new(s: f64, delta: f64, dist: ShockDistribution) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "switching cost must be finite and >= 0, got {s}"
            )));
        }
        check_delta(delta)?;
        Ok(Self { s, delta, dist })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dist(&self) -> &ShockDistribution {
        &self.dist
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchingEquilibrium {
    pub s: f64,
    pub delta: f64,
    /// Switching-cost-adjusted price gap `p1 − p0 − s`.
    pub x: f64,
    pub p1: f64,
    pub p0: f64,
    pub q1: f64,
    pub q0: f64,
    pub v1: f64,
    pub v0: f64,
    /// `v1 − v0`.
    #[serde(rename = "V")]
    pub value_gap: f64,
    pub pbar: f64,
    /// Insider demand elasticity `−f(x)·p1 / (1 − F(x))`.
    pub elasticity: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves for `x`, then prices and values.
pub fn solve_switching(
    params: &SwitchingParams,
    cfg: &SolverConfig,
) -> Result<SwitchingEquilibrium> {
    solve_at(&params.dist, params.s, params.delta, cfg)
}

/// Same as [`solve_switching`] without the `s >= 0` check; finite
/// differences at `s = 0` evaluate one step to the left.
fn solve_at(
    dist: &ShockDistribution,
    s: f64,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<SwitchingEquilibrium> {
    let res = cfg.solve(|x| dist.motion(x) + s, false)?;
    let x = res.root;
    let f = dist.pdf(x);
    let big_f = dist.cdf(x);
    let value_gap = -dist.odd_ratio(x);
    let v0 = dist.static_profit(-x) / (1.0 - delta);
    let v1 = dist.static_profit(x) + delta * v0;
    let p1 = dist.markup(x) - delta * value_gap;
    // equals markup(−x) − δV up to the root residual
    let p0 = p1 - s - x;
    Ok(SwitchingEquilibrium {
        s,
        delta,
        x,
        p1,
        p0,
        q1: 1.0 - big_f,
        q0: big_f,
        v1,
        v0,
        value_gap,
        pbar: dist.split_profit(x) + delta * dist.odd_ratio(x),
        elasticity: -f * p1 / (1.0 - big_f),
        residual: res.residual_at_root,
        iterations: res.iterations,
    })
}

/// Closed-form average price `[(1−F)² + F²]/f + δ(2F − 1)/f`.
pub fn average_price(eq: &SwitchingEquilibrium) -> f64 {
    eq.pbar
}

/// Average price as the demand-weighted mean `q0·p0 + q1·p1`.
pub fn weighted_average_price(eq: &SwitchingEquilibrium) -> f64 {
    eq.q0 * eq.p0 + eq.q1 * eq.p1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub x: f64,
    pub q1: f64,
    pub p1: f64,
    pub p0: f64,
    pub pbar: f64,
    #[serde(rename = "V")]
    pub value_gap: f64,
    pub dpbar_ds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignChange {
    /// Last grid point with the old sign.
    pub s_before: f64,
    /// First grid point with the new sign.
    pub s_after: f64,
    /// `+1` for a change from negative to positive, `−1` otherwise.
    pub direction: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
    /// Largest grid `s` before `dp̄/ds` first turns from negative.
    pub s_prime: Option<f64>,
    /// Smallest grid `s` after `dp̄/ds` last turns positive.
    pub s_doubleprime: Option<f64>,
    pub sign_changes: Vec<SignChange>,
}

/// Solves the model across `s_grid` and locates where the average price
/// turns from decreasing to increasing in `s`.
///
/// `dp̄/ds` is a central difference with step equal to the local grid
/// spacing; the end points use one extra solve just outside the grid.
pub fn sweep_s(base: &SwitchingParams, s_grid: &[f64], cfg: &SolverConfig) -> Result<SweepReport> {
    if s_grid.len() < MIN_SWEEP_POINTS {
        return Err(Error::invalid(format!(
            "s grid needs at least {MIN_SWEEP_POINTS} points, got {}",
            s_grid.len()
        )));
    }
    if s_grid[0] != 0.0 {
        return Err(Error::invalid("s grid must start at 0"));
    }
    if s_grid.iter().any(|s| !s.is_finite()) || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "s grid must be finite and strictly increasing",
        ));
    }
    let (dist, delta) = (&base.dist, base.delta);
    let solve = |s: f64| {
        solve_at(dist, s, delta, cfg).map_err(|e| Error::GridPoint {
            point: s,
            source: Box::new(e),
        })
    };
    let eqs = s_grid
        .iter()
        .map(|&s| solve(s))
        .collect::<Result<Vec<_>>>()?;
    let n = s_grid.len();
    let h_first = s_grid[1] - s_grid[0];
    let h_last = s_grid[n - 1] - s_grid[n - 2];
    let before = solve(s_grid[0] - h_first)?.pbar;
    let after = solve(s_grid[n - 1] + h_last)?.pbar;

    let rows: Vec<SweepRow> = (0..n)
        .map(|k| {
            let (s_lo, p_lo) = if k == 0 {
                (s_grid[0] - h_first, before)
            } else {
                (s_grid[k - 1], eqs[k - 1].pbar)
            };
            let (s_hi, p_hi) = if k == n - 1 {
                (s_grid[k] + h_last, after)
            } else {
                (s_grid[k + 1], eqs[k + 1].pbar)
            };
            let e = &eqs[k];
            SweepRow {
                s: e.s,
                x: e.x,
                q1: e.q1,
                p1: e.p1,
                p0: e.p0,
                pbar: e.pbar,
                value_gap: e.value_gap,
                dpbar_ds: (p_hi - p_lo) / (s_hi - s_lo),
            }
        })
        .collect();

    let mut sign_changes = Vec::new();
    let mut last: Option<(f64, bool)> = None;
    for r in &rows {
        if r.dpbar_ds == 0.0 {
            continue;
        }
        let positive = r.dpbar_ds > 0.0;
        if let Some((s_before, was_positive)) = last {
            if was_positive != positive {
                sign_changes.push(SignChange {
                    s_before,
                    s_after: r.s,
                    direction: if positive { 1 } else { -1 },
                });
            }
        }
        last = Some((r.s, positive));
    }
    let s_prime = sign_changes
        .iter()
        .find(|c| c.direction > 0)
        .map(|c| c.s_before);
    let s_doubleprime = sign_changes
        .iter()
        .rev()
        .find(|c| c.direction > 0)
        .map(|c| c.s_after);
    Ok(SweepReport {
        rows,
        s_prime,
        s_doubleprime,
        sign_changes,
    })
}

/// `0, step, 2·step, …, max` (inclusive up to rounding).
pub fn uniform_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_root::uniqueness_scan;
    use approx::assert_abs_diff_eq;

    fn solve(s: f64, delta: f64, dist: ShockDistribution) -> SwitchingEquilibrium {
        solve_switching(
            &SwitchingParams::new(s, delta, dist).unwrap(),
            &SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn symmetric_split() {
        let eq = solve(0.0, 0.0, ShockDistribution::standard_normal());
        assert_eq!(eq.x, 0.0);
        assert_abs_diff_eq!(eq.p1, 1.253_314_1, epsilon = 1e-6);
        assert_abs_diff_eq!(eq.p0, 1.253_314_1, epsilon = 1e-6);
        assert_eq!(eq.q1, 0.5);
        assert_eq!(eq.q0, 0.5);
    }

    #[test]
    fn unit_switching_cost_gap() {
        let n = ShockDistribution::standard_normal();
        let eq = solve(1.0, 0.0, n.clone());
        // fine scan of x + (2F − 1)/f + 1 over [−1, 0]
        let mut oracle = f64::NAN;
        let mut prev = n.motion(-1.0) + 1.0;
        for k in 1..=1_000_000 {
            let x = -1.0 + k as f64 * 1e-6;
            let r = n.motion(x) + 1.0;
            if (r < 0.0) != (prev < 0.0) {
                oracle = x - 0.5e-6;
                break;
            }
            prev = r;
        }
        assert_abs_diff_eq!(eq.x, oracle, epsilon = 1e-6);
        assert_abs_diff_eq!(eq.x, -0.325, epsilon = 1e-3);
    }

    #[test]
    fn logistic_no_switching_cost() {
        for delta in [0.0, 0.5, 0.9] {
            let eq = solve(0.0, delta, ShockDistribution::standard_logistic());
            assert_eq!(eq.p1, 2.0);
            assert_eq!(eq.p0, 2.0);
            assert_eq!(eq.value_gap, 0.0);
            assert_eq!(average_price(&eq), 2.0);
        }
    }

    #[test]
    fn average_price_forms_agree() {
        let eq = solve(0.0, 0.9, ShockDistribution::standard_normal());
        assert_abs_diff_eq!(average_price(&eq), 1.253_314_1, epsilon = 1e-6);
        for s in [0.3, 1.0, 4.0, 9.0] {
            for delta in [0.0, 0.5, 0.9] {
                let eq = solve(s, delta, ShockDistribution::standard_normal());
                assert_abs_diff_eq!(
                    average_price(&eq),
                    weighted_average_price(&eq),
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn equilibrium_invariants() {
        let n = ShockDistribution::standard_normal();
        for s in [0.25, 1.0, 3.0, 8.0] {
            let delta = 0.7;
            let eq = solve(s, delta, n.clone());
            assert!(eq.residual.abs() <= 1e-10);
            assert_abs_diff_eq!(eq.p1 - eq.p0 - s, eq.x, epsilon = 1e-12);
            assert!(eq.x < 0.0 && eq.q1 > 0.5 && eq.p1 > eq.p0);
            assert_abs_diff_eq!(
                eq.value_gap,
                (1.0 - 2.0 * n.cdf(eq.x)) / n.pdf(eq.x),
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(eq.v1 - eq.v0, eq.value_gap, epsilon = 1e-8);
            assert_abs_diff_eq!(
                eq.v0,
                n.cdf(eq.x).powi(2) / n.pdf(eq.x) / (1.0 - delta),
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(
                eq.p1 + delta * eq.value_gap,
                n.markup(eq.x),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                eq.elasticity * (eq.p1 + delta * eq.value_gap),
                -eq.p1,
                epsilon = 1e-8
            );
            assert!(uniqueness_scan(|x| n.motion(x) + s, (-50.0, 50.0), 0.01).is_unique());
        }
    }

    #[test]
    fn sweep_validation() {
        let base = SwitchingParams::new(0.0, 0.9, ShockDistribution::standard_normal()).unwrap();
        let cfg = SolverConfig::default();
        assert!(sweep_s(&base, &uniform_grid(2.0, 0.25), &cfg).is_err());
        let mut g = uniform_grid(10.0, 0.25);
        g[0] = 0.1;
        assert!(sweep_s(&base, &g, &cfg).is_err());
    }

    #[test]
    fn myopic_knife_edge() {
        let base = SwitchingParams::new(0.0, 0.0, ShockDistribution::standard_normal()).unwrap();
        let rep = sweep_s(&base, &uniform_grid(10.0, 0.25), &SolverConfig::default()).unwrap();
        assert!(rep.rows[0].dpbar_ds.abs() < 1e-3);
    }

    #[test]
    fn grid_builder() {
        let g = uniform_grid(10.0, 0.25);
        assert_eq!(g.len(), 41);
        assert_eq!(g[40], 10.0);
    }
}
