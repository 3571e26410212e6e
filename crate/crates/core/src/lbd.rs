//! Learning-by-doing duopoly on a capped experience grid.
//!
//! State `(i, j)` counts cumulative sales of the two firms; unit cost is
//! `c(min(i, m))`. In a Markov-perfect equilibrium the price gap
//! `P(i, j) = p(i, j) − p(j, i)` solves
//!
//! ```text
//! K(P) = C(i, j) − δ·W(i, j)
//! ```
//!
//! where `C` is the cost gap and `W(i, j) = w(i, j) − w(j, i)` with
//! `w(i, j) = v(i⁺, j) − v(i, j⁺)`. Values follow `v(i, j) = H(P) + δ·v(i, j⁺)`.
//!
//! Away from the cap every successor of `(i, j)` has strictly larger total
//! experience, so the grid is solved level by level from `i + j = 2m` down to
//! `0`. At the cap `v(j, m)` refers to itself; that self-reference is
//! eliminated in closed form, `v(j, m) = H(−P(m, j)) / (1 − δ)`, which leaves a
//! scalar monotone equation per state.

use serde::Serialize;

use crate::error::{Error, Result, State};
use crate::scalar_root::{uniqueness_scan, RootProblem, RootResult, ScanOutcome};
use crate::shock_dist::ShockDistribution;

pub const ORACLE_TOLERANCE: f64 = 1e-8;
pub const ORACLE_MAX_ITERATIONS: usize = 100_000;

/// Gaps below this are treated as zero when comparing signs.
const SIGN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LbdParams {
    costs: Vec<f64>,
    delta: f64,
    dist: ShockDistribution,
}

impl LbdParams {
    /// `costs[i]` is the unit cost after `i` sales; the last entry is the cap `c(m)`.
    pub fn new(costs: Vec<f64>, delta: f64, dist: ShockDistribution) -> Result<Self> {
        if costs.len() < 2 {
            return Err(Error::invalid(format!(
                "need costs c(0..=m) with m >= 1, got {} entries",
                costs.len()
            )));
        }
        if costs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("costs must be finite"));
        }
        if let Some(k) = costs.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::invalid(format!(
                "costs must be nonincreasing, but c({}) = {} > c({}) = {}",
                k + 1,
                costs[k + 1],
                k,
                costs[k]
            )));
        }
        check_delta(delta)?;
        Ok(Self { costs, delta, dist })
    }

    /// Experience cap `m`.
    pub fn m(&self) -> usize {
        self.costs.len() - 1
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dist(&self) -> &ShockDistribution {
        &self.dist
    }

    /// Unit cost after `i` sales, flat beyond the cap.
    pub fn cost(&self, i: usize) -> f64 {
        self.costs[i.min(self.m())]
    }

    fn with_costs(&self, costs: Vec<f64>) -> Result<Self> {
        Self::new(costs, self.delta, self.dist.clone())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "discount factor must satisfy 0 <= delta < 1, got {delta}"
        )))
    }
}

/// Per-state root-finding settings shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_bracket: f64,
    pub initial_bracket: (f64, f64),
    /// Half-width and step of the uniqueness scan run at each solved state.
    pub scan: Option<(f64, f64)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: crate::scalar_root::DEFAULT_TOLERANCE,
            max_bracket: crate::scalar_root::DEFAULT_MAX_BRACKET,
            initial_bracket: (-1.0, 1.0),
            scan: Some((20.0, 0.01)),
        }
    }
}

impl SolverConfig {
    pub fn without_scan(mut self) -> Self {
        self.scan = None;
        self
    }

    pub(crate) fn solve(
        &self,
        residual: impl Fn(f64) -> f64,
        trace: bool,
    ) -> Result<RootResult, crate::scalar_root::RootError> {
        RootProblem::new(residual)
            .bracket(self.initial_bracket.0, self.initial_bracket.1)
            .tolerance(self.tolerance)
            .max_bracket(self.max_bracket)
            .trace(trace)
            .solve()
    }

    /// The uniqueness scan stays inside the open support of `dist`, where the
    /// residual is well defined.
    fn solve_state(
        &self,
        state: State,
        dist: &ShockDistribution,
        residual: impl Fn(f64) -> f64,
        trace: bool,
    ) -> Result<RootResult> {
        if let Some((half_width, step)) = self.scan {
            let (lo, hi) = dist.support();
            let window = ((lo + step).max(-half_width), (hi - step).min(half_width));
            if let ScanOutcome::Multiple { sign_changes } = uniqueness_scan(&residual, window, step)
            {
                return Err(Error::MultipleRoots {
                    state,
                    sign_changes,
                });
            }
        }
        self.solve(residual, trace)
            .map_err(|source| Error::ConvergenceFailure { state, source })
    }
}

/// Root-finding diagnostics for one solved state `(i, j)` with `i > j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSolve {
    pub i: usize,
    pub j: usize,
    pub iterations: usize,
    pub bracket_expansions: usize,
    pub residual: f64,
}

/// One ordered state of a solved equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateRow {
    pub i: usize,
    pub j: usize,
    /// Price gap `P(i, j)`.
    pub price_gap: f64,
    pub price: f64,
    /// Probability that firm `i` makes the sale.
    pub win_prob: f64,
    pub value: f64,
    /// `w(i, j) = v(i⁺, j) − v(i, j⁺)`.
    pub w: f64,
    /// `W(i, j) = w(i, j) − w(j, i)`.
    pub big_w: f64,
    pub cost_gap: f64,
    /// `K(P) − C + δW` at the solution.
    pub residual: f64,
    /// Inverse elasticity `(1 − F(P)) / f(P)`.
    pub markup: f64,
}

/// Solved learning-by-doing equilibrium over all ordered states.
#[derive(Debug, Clone, PartialEq)]
pub struct LbdEquilibrium {
    params: LbdParams,
    rows: Vec<StateRow>,
    pub solves: Vec<StateSolve>,
}

impl LbdEquilibrium {
    pub fn params(&self) -> &LbdParams {
        &self.params
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    pub fn get(&self, i: usize, j: usize) -> &StateRow {
        &self.rows[i * (self.m() + 1) + j]
    }

    /// Rows ordered by `i`, then `j`.
    pub fn rows(&self) -> &[StateRow] {
        &self.rows
    }

    pub fn price_gap(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).price_gap
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).value
    }

    pub fn win_prob(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).win_prob
    }

    /// Sup-norm distance over the `P` and `v` columns.
    pub fn sup_distance(&self, other: &LbdEquilibrium) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                (a.price_gap - b.price_gap)
                    .abs()
                    .max((a.value - b.value).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance over every numeric column.
    pub fn sup_distance_all(&self, other: &LbdEquilibrium) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| {
                [
                    a.price_gap - b.price_gap,
                    a.price - b.price,
                    a.win_prob - b.win_prob,
                    a.value - b.value,
                    a.w - b.w,
                    a.big_w - b.big_w,
                ]
            })
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    /// `v(i, j)` minus the right side of the Bellman equation at the
    /// equilibrium prices.
    pub fn bellman_residual(&self, i: usize, j: usize) -> f64 {
        let m = self.m();
        let (ip, jp) = ((i + 1).min(m), (j + 1).min(m));
        let r = self.get(i, j);
        let delta = self.params.delta;
        let win = 1.0 - self.params.dist.cdf(r.price_gap);
        let rhs = win * (r.price - self.params.cost(i) + delta * self.value(ip, j))
            + (1.0 - win) * delta * self.value(i, jp);
        r.value - rhs
    }

    /// For each state with `i > j`, the win-probability gap and the
    /// dominance drive `C − δW`.
    pub fn dominance_report(&self) -> Vec<DominanceRow> {
        let delta = self.params.delta;
        let mut out = Vec::new();
        for i in 0..=self.m() {
            for j in 0..i {
                let r = self.get(i, j);
                let q_gap = r.win_prob - self.win_prob(j, i);
                let drive = r.cost_gap - delta * r.big_w;
                let increasing = r.price_gap < -SIGN_EPS;
                let consistent = if r.price_gap.abs() <= SIGN_EPS {
                    drive.abs() <= 10.0 * SIGN_EPS
                } else {
                    increasing == (drive < 0.0)
                };
                out.push(DominanceRow {
                    i,
                    j,
                    q_gap,
                    drive,
                    increasing_dominance: increasing,
                    consistent,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceRow {
    pub i: usize,
    pub j: usize,
    /// `q(i, j) − q(j, i)`.
    pub q_gap: f64,
    /// `C(i, j) − δ·W(i, j)`.
    pub drive: f64,
    /// The leader is more likely to win the next sale.
    pub increasing_dominance: bool,
    /// The flag agrees with the sign of the drive.
    pub consistent: bool,
}

/// Dense `(m+1)²` table indexed by ordered state.
struct Grid {
    n: usize,
    data: Vec<f64>,
}

impl Grid {
    fn new(m: usize, fill: f64) -> Self {
        Self {
            n: m + 1,
            data: vec![fill; (m + 1) * (m + 1)],
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }
}

/// `W(i, j)` from a value table, with capped successors.
fn big_w(v: &Grid, m: usize, i: usize, j: usize) -> f64 {
    let (ip, jp) = ((i + 1).min(m), (j + 1).min(m));
    (v.at(ip, j) - v.at(i, jp)) - (v.at(jp, i) - v.at(j, ip))
}

fn assemble(params: &LbdParams, gap: &Grid, v: &Grid, solves: Vec<StateSolve>) -> LbdEquilibrium {
    let m = params.m();
    let dist = &params.dist;
    let delta = params.delta;
    let mut rows = Vec::with_capacity((m + 1) * (m + 1));
    for i in 0..=m {
        for j in 0..=m {
            let (ip, jp) = ((i + 1).min(m), (j + 1).min(m));
            let p_gap = gap.at(i, j);
            let w = v.at(ip, j) - v.at(i, jp);
            let bw = big_w(v, m, i, j);
            let c = params.cost(i) - params.cost(j);
            let markup = dist.markup(p_gap);
            rows.push(StateRow {
                i,
                j,
                price_gap: p_gap,
                price: params.cost(i) + markup - delta * w,
                win_prob: 1.0 - dist.cdf(p_gap),
                value: v.at(i, j),
                w,
                big_w: bw,
                cost_gap: c,
                residual: dist.motion(p_gap) - c + delta * bw,
                markup,
            });
        }
    }
    LbdEquilibrium {
        params: params.clone(),
        rows,
        solves,
    }
}

/// Solves the equilibrium by backward induction over total experience.
pub fn solve_backward(params: &LbdParams, cfg: &SolverConfig) -> Result<LbdEquilibrium> {
    let m = params.m();
    let dist = &params.dist;
    let delta = params.delta;
    let h0 = dist.static_profit(0.0);
    let mut gap = Grid::new(m, 0.0);
    let mut v = Grid::new(m, f64::NAN);
    let mut solves = Vec::new();

    v.set(m, m, h0 / (1.0 - delta));
    for total in (0..2 * m).rev() {
        // diagonal first; P(k, k) = 0 by symmetry
        if total % 2 == 0 {
            let k = total / 2;
            v.set(k, k, h0 + delta * v.at(k, k + 1));
        }
        let i_max = total.min(m);
        let i_min = total / 2 + 1;
        for i in (i_min..=i_max).rev() {
            let j = total - i;
            let c = params.cost(i) - params.cost(j);
            let p = if i < m {
                let w_fixed = big_w(&v, m, i, j);
                let res = cfg.solve_state(
                    (i, j),
                    dist,
                    |p| dist.motion(p) - c + delta * w_fixed,
                    false,
                )?;
                solves.push(StateSolve::from_root(i, j, &res));
                res.root
            } else {
                // i = m: v(m, j) = H(P) + δ v(m, j+1) and v(j, m) = H(−P)/(1−δ)
                let v_next = v.at(m, j + 1);
                let v_rival_next = v.at(j + 1, m);
                let residual = |p: f64| {
                    let w_own = dist.static_profit(p) - (1.0 - delta) * v_next;
                    let w_rival = v_rival_next - dist.static_profit(-p) / (1.0 - delta);
                    dist.motion(p) - c + delta * (w_own - w_rival)
                };
                let res = cfg.solve_state((i, j), dist, residual, false)?;
                solves.push(StateSolve::from_root(i, j, &res));
                res.root
            };
            gap.set(i, j, p);
            gap.set(j, i, -p);
            let jp = j + 1;
            let ip = (i + 1).min(m);
            if i < m {
                v.set(i, j, dist.static_profit(p) + delta * v.at(i, jp));
                v.set(j, i, dist.static_profit(-p) + delta * v.at(j, ip));
            } else {
                v.set(m, j, dist.static_profit(p) + delta * v.at(m, jp));
                v.set(j, m, dist.static_profit(-p) / (1.0 - delta));
            }
        }
    }
    Ok(assemble(params, &gap, &v, solves))
}

impl StateSolve {
    fn from_root(i: usize, j: usize, r: &RootResult) -> Self {
        Self {
            i,
            j,
            iterations: r.iterations,
            bracket_expansions: r.bracket_expansions,
            residual: r.residual_at_root,
        }
    }
}

/// Closed-form values of the two-step (`m = 1`) model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStepReport {
    pub p10: f64,
    pub v11: f64,
    pub v01: f64,
    pub v10: f64,
    pub v00: f64,
    /// `W(1, 0)` at the solution.
    pub w10: f64,
    /// `(P, R(P))` at each bisection midpoint of the single-unknown equation.
    pub trace: Vec<(f64, f64)>,
}

/// Two-step learning: one unknown `P(1, 0)`, everything else in closed form.
pub fn solve_two_step(
    params: &LbdParams,
    cfg: &SolverConfig,
) -> Result<(LbdEquilibrium, TwoStepReport)> {
    if params.m() != 1 {
        return Err(Error::invalid(format!(
            "two-step model needs m = 1, got m = {}",
            params.m()
        )));
    }
    let dist = &params.dist;
    let delta = params.delta;
    let h0 = dist.static_profit(0.0);
    let v11 = h0 / (1.0 - delta);
    let c = params.cost(1) - params.cost(0);
    // W(1,0) = [v(1,0) − v(1,1)] − [v(1,1) − v(0,1)]
    let w10 = |p: f64| {
        dist.static_profit(p) + delta * v11 - 2.0 * v11 + dist.static_profit(-p) / (1.0 - delta)
    };
    let res = cfg.solve_state((1, 0), dist, |p| dist.motion(p) - c + delta * w10(p), true)?;
    let p10 = res.root;
    let v10 = dist.static_profit(p10) + delta * v11;
    let v01 = dist.static_profit(-p10) / (1.0 - delta);
    let v00 = h0 + delta * v01;

    let mut gap = Grid::new(1, 0.0);
    gap.set(1, 0, p10);
    gap.set(0, 1, -p10);
    let mut v = Grid::new(1, 0.0);
    v.set(1, 1, v11);
    v.set(1, 0, v10);
    v.set(0, 1, v01);
    v.set(0, 0, v00);
    let eq = assemble(params, &gap, &v, vec![StateSolve::from_root(1, 0, &res)]);
    let report = TwoStepReport {
        p10,
        v11,
        v01,
        v10,
        v00,
        w10: w10(p10),
        trace: res.trace,
    };
    Ok((eq, report))
}

/// Fixed point reached by [`value_iteration_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub equilibrium: LbdEquilibrium,
    /// Passes that changed the table by at least the tolerance.
    pub iterations: usize,
    pub final_change: f64,
}

/// Independent check of [`solve_backward`]: simultaneous (Jacobi) updates of
/// every price gap and value, starting from `v ≡ 0`, `P ≡ 0`, until the
/// sup-norm change drops below `tol`.
pub fn value_iteration_oracle(
    params: &LbdParams,
    cfg: &SolverConfig,
    max_iter: usize,
    tol: f64,
) -> Result<OracleSolution> {
    let m = params.m();
    let dist = &params.dist;
    let delta = params.delta;
    let cfg = cfg.without_scan();
    let mut gap = Grid::new(m, 0.0);
    let mut v = Grid::new(m, 0.0);
    let mut change = f64::INFINITY;
    for pass in 1..=max_iter {
        let mut next_gap = Grid::new(m, 0.0);
        let mut next_v = Grid::new(m, 0.0);
        for i in 0..=m {
            for j in 0..i {
                let c = params.cost(i) - params.cost(j);
                let target = c - delta * big_w(&v, m, i, j);
                let res = cfg
                    .solve(|p| dist.motion(p) - target, false)
                    .map_err(|source| Error::ConvergenceFailure {
                        state: (i, j),
                        source,
                    })?;
                next_gap.set(i, j, res.root);
                next_gap.set(j, i, -res.root);
            }
        }
        for i in 0..=m {
            for j in 0..=m {
                let jp = (j + 1).min(m);
                next_v.set(
                    i,
                    j,
                    dist.static_profit(next_gap.at(i, j)) + delta * v.at(i, jp),
                );
            }
        }
        change = next_v
            .data
            .iter()
            .zip(&v.data)
            .chain(next_gap.data.iter().zip(&gap.data))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        gap = next_gap;
        v = next_v;
        if change < tol {
            return Ok(OracleSolution {
                equilibrium: assemble(params, &gap, &v, Vec::new()),
                iterations: pass - 1,
                final_change: change,
            });
        }
    }
    Err(Error::MaxIterExceeded {
        iterations: max_iter,
        change,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypercompRow {
    pub c1: f64,
    pub v00: f64,
    pub p10: f64,
}

/// Two-step equilibria across experienced-cost values `c(1)`, holding `c(0)` fixed.
pub fn hypercomp_sweep(
    base: &LbdParams,
    c1_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<HypercompRow>> {
    if base.m() != 1 {
        return Err(Error::invalid("hyper-competition sweep needs m = 1"));
    }
    if c1_grid.is_empty() {
        return Err(Error::invalid("c1 grid is empty"));
    }
    if c1_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("c1 grid must be strictly increasing"));
    }
    let c0 = base.cost(0);
    if let Some(&bad) = c1_grid.iter().find(|&&c| !(c <= c0)) {
        return Err(Error::invalid(format!("c1 = {bad} exceeds c(0) = {c0}")));
    }
    c1_grid
        .iter()
        .map(|&c1| {
            let at_point = |e: Error| Error::GridPoint {
                point: c1,
                source: Box::new(e),
            };
            let params = base.with_costs(vec![c0, c1]).map_err(at_point)?;
            let eq = solve_backward(&params, cfg).map_err(at_point)?;
            Ok(HypercompRow {
                c1,
                v00: eq.value(0, 0),
                p10: eq.price_gap(1, 0),
            })
        })
        .collect()
}
