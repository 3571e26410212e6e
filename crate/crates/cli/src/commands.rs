use std::io;

use serde::Serialize;

use oligodyn::format::{
    write_equilibrium_csv, write_hypercomp_csv, write_sweep_csv, write_trajectory_csv,
};
use oligodyn::lbd::{
    hypercomp_sweep, solve_backward, solve_two_step, value_iteration_oracle, DominanceRow,
    HypercompRow, StateSolve, TwoStepReport,
};
use oligodyn::predation::{predation_limit_from, PredationLimit};
use oligodyn::shock_dist::Violation;
use oligodyn::sim::{simulate, Policy, SimConfig, SimSummary};
use oligodyn::switching::{
    solve_switching, sweep_s, uniform_grid, weighted_average_price, SwitchingEquilibrium,
};
use oligodyn::{LbdParams, PredationParams, ShockDistribution, SolverConfig, SwitchingParams};

use crate::config::Resolved;
use crate::output::{csv_bytes, emit, json_bytes, meta, summary_path, Tolerances};
use crate::CliError;

pub fn execute(r: &Resolved) -> Result<(), CliError> {
    match r.command {
        "solve-lbd" => solve_lbd(r),
        "solve-switching" => solve_switching_cmd(r),
        "sweep-switching" => sweep_switching(r),
        "sweep-hypercomp" => sweep_hypercomp(r),
        "predation" => predation(r),
        "simulate" => simulate_cmd(r),
        "validate-dist" => validate_dist(r),
        other => Err(CliError::Invalid(format!("unknown subcommand `{other}`"))),
    }
}

fn distribution(r: &Resolved) -> Result<ShockDistribution, CliError> {
    let name = r.str("dist")?;
    match name {
        "normal" => Ok(ShockDistribution::standard_normal()),
        "logistic" => Ok(ShockDistribution::standard_logistic()),
        path => match ShockDistribution::from_csv_path(path) {
            Ok(parsed) => Ok(parsed?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(CliError::Invalid(format!(
                "--dist: no such distribution or file `{path}`"
            ))),
            Err(e) => Err(CliError::Io(format!("cannot read {path}: {e}"))),
        },
    }
}

fn solver_config(r: &Resolved) -> Result<SolverConfig, CliError> {
    let tolerance = r.f64("tolerance")?;
    let max_bracket = r.f64("max-bracket")?;
    if tolerance <= 0.0 {
        return Err(CliError::Invalid(format!(
            "--tolerance must be positive, got {tolerance}"
        )));
    }
    if max_bracket <= 0.0 {
        return Err(CliError::Invalid(format!(
            "--max-bracket must be positive, got {max_bracket}"
        )));
    }
    let b = max_bracket.min(1.0);
    Ok(SolverConfig {
        tolerance,
        max_bracket,
        initial_bracket: (-b, b),
        ..SolverConfig::default()
    })
}

fn tolerances(cfg: &SolverConfig, oracle: Option<f64>) -> Tolerances {
    Tolerances {
        root: cfg.tolerance,
        max_bracket: cfg.max_bracket,
        oracle,
    }
}

fn lbd_params(r: &Resolved, dist: ShockDistribution) -> Result<LbdParams, CliError> {
    let costs = r.f64_list("costs")?;
    if r.has("m") {
        let m = r.usize("m")?;
        if m + 1 != costs.len() {
            return Err(CliError::Invalid(format!(
                "--m {m} needs {} costs, got {}",
                m + 1,
                costs.len()
            )));
        }
    }
    Ok(LbdParams::new(costs, r.f64("delta")?, dist)?)
}

#[derive(Serialize)]
struct LbdSummary {
    solver: String,
    m: usize,
    delta: f64,
    max_abs_residual: f64,
    dominance: Vec<DominanceRow>,
    solves: Vec<StateSolve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_step: Option<TwoStepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_final_change: Option<f64>,
}

fn solve_lbd(r: &Resolved) -> Result<(), CliError> {
    let params = lbd_params(r, distribution(r)?)?;
    let cfg = solver_config(r)?;
    let solver = r.str("solver")?.to_string();
    let mut two_step = None;
    let mut oracle = None;
    let mut oracle_tol = None;
    let eq = match solver.as_str() {
        "backward" => solve_backward(&params, &cfg)?,
        "two-step" => {
            let (eq, report) = solve_two_step(&params, &cfg)?;
            two_step = Some(report);
            eq
        }
        "value-iteration" => {
            let tol = r.f64("oracle-tolerance")?;
            let max_iter = r.usize("oracle-max-iter")?;
            let sol = value_iteration_oracle(&params, &cfg, max_iter, tol)?;
            oracle = Some((sol.iterations, sol.final_change));
            oracle_tol = Some(tol);
            sol.equilibrium
        }
        other => {
            return Err(CliError::Invalid(format!(
                "--solver must be backward, two-step or value-iteration, got `{other}`"
            )))
        }
    };
    let csv = csv_bytes(|b| write_equilibrium_csv(&eq, b));
    let summary = LbdSummary {
        solver,
        m: eq.m(),
        delta: params.delta(),
        max_abs_residual: eq
            .rows()
            .iter()
            .map(|row| row.residual.abs())
            .fold(0.0, f64::max),
        dominance: eq.dominance_report(),
        solves: eq.solves.clone(),
        two_step,
        oracle_iterations: oracle.map(|o| o.0),
        oracle_final_change: oracle.map(|o| o.1),
    };
    let json = json_bytes(meta(r, tolerances(&cfg, oracle_tol)), &summary)?;
    emit(r.output("out").as_deref(), &csv)?;
    if let Some(p) = summary_path(r) {
        emit(Some(&p), &json)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SwitchingOutput {
    #[serde(flatten)]
    eq: SwitchingEquilibrium,
    weighted_average_price: f64,
}

fn solve_switching_cmd(r: &Resolved) -> Result<(), CliError> {
    let params = SwitchingParams::new(r.f64("s")?, r.f64("delta")?, distribution(r)?)?;
    let cfg = solver_config(r)?;
    let eq = solve_switching(&params, &cfg)?;
    let body = SwitchingOutput {
        weighted_average_price: weighted_average_price(&eq),
        eq,
    };
    emit(
        r.output("out").as_deref(),
        &json_bytes(meta(r, tolerances(&cfg, None)), &body)?,
    )
}

fn sweep_switching(r: &Resolved) -> Result<(), CliError> {
    let s_max = r.f64("s-max")?;
    let s_step = r.f64("s-step")?;
    if s_max < 0.0 || s_step <= 0.0 {
        return Err(CliError::Invalid(format!(
            "need --s-max >= 0 and --s-step > 0, got {s_max} and {s_step}"
        )));
    }
    let params = SwitchingParams::new(0.0, r.f64("delta")?, distribution(r)?)?;
    let cfg = solver_config(r)?;
    let report = sweep_s(&params, &uniform_grid(s_max, s_step), &cfg)?;
    let csv = csv_bytes(|b| write_sweep_csv(&report, b));
    let json = json_bytes(meta(r, tolerances(&cfg, None)), &report)?;
    emit(r.output("out").as_deref(), &csv)?;
    if let Some(p) = summary_path(r) {
        emit(Some(&p), &json)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HypercompSummary<'a> {
    c0: f64,
    delta: f64,
    rows: &'a [HypercompRow],
    v00_increasing_in_c1: bool,
}

fn sweep_hypercomp(r: &Resolved) -> Result<(), CliError> {
    let c0 = r.f64("c0")?;
    let grid = r.f64_list("c1")?;
    let base = LbdParams::new(vec![c0, c0], r.f64("delta")?, distribution(r)?)?;
    let cfg = solver_config(r)?;
    let rows = hypercomp_sweep(&base, &grid, &cfg)?;
    let csv = csv_bytes(|b| write_hypercomp_csv(&rows, b));
    let summary = HypercompSummary {
        c0,
        delta: base.delta(),
        v00_increasing_in_c1: rows.windows(2).all(|w| w[1].v00 > w[0].v00),
        rows: &rows,
    };
    let json = json_bytes(meta(r, tolerances(&cfg, None)), &summary)?;
    emit(r.output("out").as_deref(), &csv)?;
    if let Some(p) = summary_path(r) {
        emit(Some(&p), &json)?;
    }
    Ok(())
}

fn predation(r: &Resolved) -> Result<(), CliError> {
    let lbd = lbd_params(r, distribution(r)?)?;
    let cfg = solver_config(r)?;
    let no_exit = solve_backward(&lbd, &cfg)?;
    let v_mono = match (r.opt_f64("v-mono")?, r.opt_f64("v-mono-factor")?) {
        (Some(v), _) => v,
        (None, Some(k)) => k * no_exit.value(1, 1),
        (None, None) => {
            return Err(CliError::Invalid(
                "predation needs --v-mono or --v-mono-factor".into(),
            ))
        }
    };
    let mut params = PredationParams::new(lbd, v_mono)?.fixed_cost(r.f64("fixed-cost")?)?;
    if let Some(a) = r.opt_f64("alpha")? {
        params = params.alpha(a)?;
    }
    let limit: PredationLimit = predation_limit_from(&params, &no_exit, &cfg)?;
    emit(
        r.output("out").as_deref(),
        &json_bytes(meta(r, tolerances(&cfg, None)), &limit)?,
    )
}

fn parse_initial(r: &Resolved) -> Result<(usize, usize), CliError> {
    let raw = r.str("initial")?;
    let bad = || {
        CliError::Invalid(format!(
            "--initial must be `i,j` with non-negative integers, got `{raw}`"
        ))
    };
    let (i, j) = raw.split_once(',').ok_or_else(bad)?;
    Ok((
        i.trim().parse().map_err(|_| bad())?,
        j.trim().parse().map_err(|_| bad())?,
    ))
}

fn simulate_cmd(r: &Resolved) -> Result<(), CliError> {
    let dist = distribution(r)?;
    let cfg = solver_config(r)?;
    let trajectories = r.output("trajectories");
    let sim_cfg = SimConfig {
        periods: r.usize("periods")?,
        replications: r.usize("replications")?,
        seed: r.u64("seed")?,
        initial: parse_initial(r)?,
        keep_trajectories: trajectories.is_some(),
        sample_shocks: r.bool("sample-shocks")?,
    };
    let result = match r.str("model")? {
        "lbd" => {
            let eq = solve_backward(&lbd_params(r, dist)?, &cfg)?;
            simulate(&Policy::Lbd(&eq), &sim_cfg)?
        }
        "switching" => {
            let eq = solve_switching(
                &SwitchingParams::new(r.f64("s")?, r.f64("delta")?, dist.clone())?,
                &cfg,
            )?;
            simulate(
                &Policy::Switching {
                    eq: &eq,
                    dist: &dist,
                },
                &sim_cfg,
            )?
        }
        other => {
            return Err(CliError::Invalid(format!(
                "--model must be lbd or switching, got `{other}`"
            )))
        }
    };
    let summary: SimSummary = result.summary();
    let json = json_bytes(meta(r, tolerances(&cfg, None)), &summary)?;
    if let (Some(path), Some(rows)) = (trajectories.as_deref(), result.trajectories.as_deref()) {
        emit(Some(path), &csv_bytes(|b| write_trajectory_csv(rows, b)))?;
    }
    emit(r.output("out").as_deref(), &json)
}

#[derive(Serialize)]
struct ValidationReport {
    distribution: String,
    valid: bool,
    violations: Vec<Violation>,
}

fn validate_dist(r: &Resolved) -> Result<(), CliError> {
    let dist = distribution(r)?;
    let violations = dist.validate();
    let body = ValidationReport {
        distribution: dist.to_string(),
        valid: violations.is_empty(),
        violations,
    };
    let tol = Tolerances {
        root: oligodyn::scalar_root::DEFAULT_TOLERANCE,
        max_bracket: oligodyn::scalar_root::DEFAULT_MAX_BRACKET,
        oracle: None,
    };
    emit(
        r.output("out").as_deref(),
        &json_bytes(meta(r, tol), &body)?,
    )
}
