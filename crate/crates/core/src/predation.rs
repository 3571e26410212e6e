//! Limit analysis of predatory pricing when the laggard may exit.
//!
//! Each period a firm faces an avoidable fixed cost that is zero with
//! probability `α` and prohibitive otherwise. As `α → 0` the laggard exits at
//! `(0, 1)`, the leader inherits the monopoly value `ṽ(1)` at `(1, 0)`, and the
//! dynamic term becomes `W̃(1, 0) = ṽ(1) − 2·v(1, 1)`, which does not depend
//! on the price gap. The exit-model gap `P̃(1, 0)` then solves
//! `K(P̃) = C(1, 0) − δ·W̃(1, 0)` and is compared with the no-exit gap `P̂(1, 0)`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lbd::{solve_backward, LbdEquilibrium, LbdParams, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PredationParams {
    lbd: LbdParams,
    v_mono: f64,
    fixed_cost: f64,
    alpha: Option<f64>,
}

impl PredationParams {
    /// `v_mono` is the monopoly value `ṽ(1)`, taken as given.
    pub fn new(lbd: LbdParams, v_mono: f64) -> Result<Self> {
        if lbd.m() != 1 {
            return Err(Error::invalid(format!(
                "predation model needs m = 1, got m = {}",
                lbd.m()
            )));
        }
        if !(v_mono > 0.0) || !v_mono.is_finite() {
            return Err(Error::invalid(format!(
                "monopoly value must be finite and positive, got {v_mono}"
            )));
        }
        Ok(Self {
            lbd,
            v_mono,
            fixed_cost: 0.0,
            alpha: None,
        })
    }

    /// Avoidable fixed cost `A`; echoed in reports only.
    pub fn fixed_cost(mut self, a: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::invalid(format!(
                "fixed cost must be finite and >= 0, got {a}"
            )));
        }
        self.fixed_cost = a;
        Ok(self)
    }

    /// Probability of a zero fixed cost; echoed in reports only.
    pub fn alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        self.alpha = Some(alpha);
        Ok(self)
    }

    pub fn lbd(&self) -> &LbdParams {
        &self.lbd
    }

    pub fn v_mono(&self) -> f64 {
        self.v_mono
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredationLimit {
    pub v11: f64,
    pub v01: f64,
    pub v10: f64,
    #[serde(rename = "W_tilde")]
    pub w_tilde: f64,
    #[serde(rename = "P_tilde")]
    pub p_tilde: f64,
    #[serde(rename = "P_hat")]
    pub p_hat: f64,
    pub v00_tilde: f64,
    /// Leader price `p̃(1, 0)` in the exit model.
    pub p_tilde_10: f64,
    /// `P̃(1, 0) < P̂(1, 0)`.
    pub predation: bool,
    /// `ṽ(0, 0) > 0`.
    pub entry: bool,
    /// `p̃(1, 0) < c(1)`; diagnostic only.
    pub below_mc: bool,
    #[serde(rename = "A")]
    pub fixed_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

pub fn predation_limit(params: &PredationParams, cfg: &SolverConfig) -> Result<PredationLimit> {
    let no_exit = solve_backward(&params.lbd, cfg)?;
    predation_limit_from(params, &no_exit, cfg)
}

/// Limit quantities given an already solved no-exit equilibrium.
pub fn predation_limit_from(
    params: &PredationParams,
    no_exit: &LbdEquilibrium,
    cfg: &SolverConfig,
) -> Result<PredationLimit> {
    let lbd = &params.lbd;
    let dist = lbd.dist();
    let delta = lbd.delta();
    let v11 = no_exit.value(1, 1);
    let w_tilde = params.v_mono - 2.0 * v11;
    let c = lbd.cost(1) - lbd.cost(0);
    let target = c - delta * w_tilde;
    let res = cfg
        .solve(|p| dist.motion(p) - target, false)
        .map_err(|source| Error::ConvergenceFailure {
            state: (1, 0),
            source,
        })?;
    let p_tilde = res.root;
    let p_hat = no_exit.price_gap(1, 0);
    // ṽ(0, 1) → 0, so ṽ(0, 0) = H(0) + δ·0
    let v00_tilde = dist.static_profit(0.0);
    let p_tilde_10 = lbd.cost(1) + dist.markup(p_tilde) - delta * (params.v_mono - v11);
    Ok(PredationLimit {
        v11,
        v01: 0.0,
        v10: params.v_mono,
        w_tilde,
        p_tilde,
        p_hat,
        v00_tilde,
        p_tilde_10,
        predation: p_tilde < p_hat,
        entry: v00_tilde > 0.0,
        below_mc: p_tilde_10 < lbd.cost(1),
        fixed_cost: params.fixed_cost,
        alpha: params.alpha,
    })
}

/// Plain-text table of every limit quantity.
pub fn predation_report(limit: &PredationLimit) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<28} {v}");
    };
    line("v(1,1)", format!("{:.10}", limit.v11));
    line("v~(0,1)", format!("{:.10}", limit.v01));
    line("v~(1,0) = v~(1)", format!("{:.10}", limit.v10));
    line("W~(1,0)", format!("{:.10}", limit.w_tilde));
    line("P~(1,0)", format!("{:.10}", limit.p_tilde));
    line("P^(1,0)", format!("{:.10}", limit.p_hat));
    line("v~(0,0)", format!("{:.10}", limit.v00_tilde));
    line("p~(1,0)", format!("{:.10}", limit.p_tilde_10));
    line("A", format!("{:.10}", limit.fixed_cost));
    if let Some(a) = limit.alpha {
        line("alpha", format!("{a}"));
    }
    line("predation (P~ < P^)", limit.predation.to_string());
    line("entry (v~(0,0) > 0)", limit.entry.to_string());
    line("below_mc (diagnostic only)", limit.below_mc.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shock_dist::ShockDistribution;

    fn lbd(costs: &[f64], delta: f64) -> LbdParams {
        LbdParams::new(costs.to_vec(), delta, ShockDistribution::standard_normal()).unwrap()
    }

    fn limit(costs: &[f64], delta: f64, mono_factor: f64) -> PredationLimit {
        let l = lbd(costs, delta);
        let cfg = SolverConfig::default();
        let v11 = solve_backward(&l, &cfg).unwrap().value(1, 1);
        predation_limit(&PredationParams::new(l, mono_factor * v11).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn boundary_has_no_predation() {
        let lim = limit(&[1.0, 1.0], 0.9, 2.0);
        assert_eq!(lim.w_tilde, 0.0);
        assert_eq!(lim.p_tilde, 0.0);
        assert_eq!(lim.p_hat, 0.0);
        assert!(!lim.predation);
    }

    #[test]
    fn large_monopoly_value_triggers_predation() {
        let lim = limit(&[1.0, 0.5], 0.9, 3.0);
        assert!(lim.w_tilde > 0.0);
        assert!(lim.p_tilde < lim.p_hat);
        assert!(lim.predation && lim.entry);
        assert_eq!(lim.v01, 0.0);
    }

    #[test]
    fn myopic_control() {
        let lim = limit(&[1.0, 0.5], 0.0, 5.0);
        assert_eq!(lim.p_tilde, lim.p_hat);
        assert!(!lim.predation);
    }

    #[test]
    fn gap_decreases_in_monopoly_value() {
        let gaps: Vec<f64> = [2.0, 2.5, 3.0, 4.0]
            .iter()
            .map(|&k| limit(&[1.0, 0.5], 0.6, k).p_tilde)
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn report_lists_flags() {
        let text = predation_report(&limit(&[1.0, 0.5], 0.9, 3.0));
        assert!(text.contains("predation (P~ < P^)          true"));
        assert!(text.contains("diagnostic only"));
    }

    #[test]
    fn param_checks() {
        assert!(PredationParams::new(lbd(&[1.0, 0.7, 0.5], 0.5), 1.0).is_err());
        assert!(PredationParams::new(lbd(&[1.0, 0.5], 0.5), 0.0).is_err());
        let p = PredationParams::new(lbd(&[1.0, 0.5], 0.5), 1.0).unwrap();
        assert!(p.clone().alpha(1.5).is_err());
        assert!(p.fixed_cost(-1.0).is_err());
    }
}
