//! Browser bindings: three solver entry points that return plot-ready text.
//!
//! The `*_text` functions hold the logic and run natively in tests; the
//! `#[wasm_bindgen]` wrappers only convert errors into JS exceptions.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use wasm_bindgen::prelude::*;

use oligodyn::format::write_equilibrium_csv;
use oligodyn::lbd::{hypercomp_sweep, solve_backward};
use oligodyn::switching::{sweep_s, uniform_grid};
use oligodyn::{LbdParams, ShockDistribution, SolverConfig, SwitchingParams};

/// Upper bound on grid sizes so a slider cannot freeze the page.
pub const MAX_POINTS: usize = 2000;

fn dist(name: &str) -> Result<ShockDistribution, String> {
    match name {
        "normal" => Ok(ShockDistribution::standard_normal()),
        "logistic" => Ok(ShockDistribution::standard_logistic()),
        other => Err(format!("unknown distribution `{other}`")),
    }
}

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    aux: Vec<f64>,
    marks: Vec<f64>,
}

/// Average price against switching cost: `x = s`, `y = p̄`, `aux = q1`,
/// `marks` = the grid points where `dp̄/ds` turns from negative to positive.
pub fn sweep_switching_text(
    delta: f64,
    s_max: f64,
    s_step: f64,
    dist_name: &str,
) -> Result<String, String> {
    if !(s_step > 0.0) || !(s_max >= 0.0) || s_max / s_step > MAX_POINTS as f64 {
        return Err(format!(
            "choose 0 < step and at most {MAX_POINTS} grid points"
        ));
    }
    let base = SwitchingParams::new(0.0, delta, dist(dist_name)?).map_err(|e| e.to_string())?;
    let report = sweep_s(
        &base,
        &uniform_grid(s_max, s_step),
        &SolverConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let curve = Curve {
        x: report.rows.iter().map(|r| r.s).collect(),
        y: report.rows.iter().map(|r| r.pbar).collect(),
        aux: report.rows.iter().map(|r| r.q1).collect(),
        marks: report
            .s_prime
            .into_iter()
            .chain(report.s_doubleprime)
            .collect(),
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

/// Equilibrium table for comma-separated costs, as CSV.
pub fn solve_lbd_text(costs: &str, delta: f64, dist_name: &str) -> Result<String, String> {
    let costs = costs
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{c}` is not a number"))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    if costs.len() > 21 {
        return Err("at most 20 experience levels".into());
    }
    let params = LbdParams::new(costs, delta, dist(dist_name)?).map_err(|e| e.to_string())?;
    let eq = solve_backward(&params, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_equilibrium_csv(&eq, &mut buf).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

/// Two-step values across `c(1) ∈ (0, c0]`: `x = c(1)`, `y = v(0,0)`, `aux = P(1,0)`.
pub fn hypercomp_text(
    c0: f64,
    delta: f64,
    points: usize,
    dist_name: &str,
) -> Result<String, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must lie in 2..={MAX_POINTS}"));
    }
    if !(c0 > 0.0) {
        return Err("c0 must be positive".into());
    }
    let base = LbdParams::new(vec![c0, c0], delta, dist(dist_name)?).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (1..=points)
        .map(|k| c0 * k as f64 / points as f64)
        .collect();
    let rows =
        hypercomp_sweep(&base, &grid, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let curve = Curve {
        x: grid,
        y: rows.iter().map(|r| r.v00).collect(),
        aux: rows.iter().map(|r| r.p10).collect(),
        marks: Vec::new(),
    };
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn sweep_switching(delta: f64, s_max: f64, s_step: f64, dist: &str) -> Result<String, JsError> {
    sweep_switching_text(delta, s_max, s_step, dist).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve_lbd(costs: &str, delta: f64, dist: &str) -> Result<String, JsError> {
    solve_lbd_text(costs, delta, dist).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn hypercomp(c0: f64, delta: f64, points: usize, dist: &str) -> Result<String, JsError> {
    hypercomp_text(c0, delta, points, dist).map_err(|e| JsError::new(&e))
}
