//! Seeded Monte Carlo of market dynamics under solved equilibrium policies.
//!
//! Replication `r` draws from a ChaCha8 generator seeded with the run seed
//! and switched to stream `r`, so every replication has its own independent
//! substream and the aggregate does not depend on scheduling. All aggregates
//! are integer counts, merged by addition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lbd::LbdEquilibrium;
use crate::shock_dist::ShockDistribution;
use crate::switching::SwitchingEquilibrium;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimModel {
    Lbd,
    Switching,
}

/// The pricing rule a simulation runs under.
#[derive(Debug, Clone)]
pub enum Policy<'a> {
    Lbd(&'a LbdEquilibrium),
    Switching {
        eq: &'a SwitchingEquilibrium,
        dist: &'a ShockDistribution,
    },
}

impl Policy<'_> {
    pub fn model(&self) -> SimModel {
        match self {
            Policy::Lbd(_) => SimModel::Lbd,
            Policy::Switching { .. } => SimModel::Switching,
        }
    }

    fn state_count(&self) -> usize {
        match self {
            Policy::Lbd(eq) => (eq.m() + 1) * (eq.m() + 1),
            Policy::Switching { .. } => 2,
        }
    }

    /// Solved probability that firm A wins in each state.
    fn solved_q(&self) -> Vec<f64> {
        match self {
            Policy::Lbd(eq) => eq.rows().iter().map(|r| r.win_prob).collect(),
            Policy::Switching { eq, .. } => vec![eq.q1, eq.q0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub periods: usize,
    pub replications: usize,
    pub seed: u64,
    /// Starting experience `(i, j)` for learning-by-doing runs.
    pub initial: (usize, usize),
    pub keep_trajectories: bool,
    /// Draw `ξ` and compare with the price gap instead of a uniform draw
    /// against the win probability.
    pub sample_shocks: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            periods: 100,
            replications: 10_000,
            seed: 0,
            initial: (0, 0),
            keep_trajectories: false,
            sample_shocks: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Firm {
    A,
    B,
}

/// One period of one replication. For switching runs `i` (`j`) is 1 when
/// seller A (B) is the insider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryRow {
    pub rep: usize,
    pub period: usize,
    pub i: usize,
    pub j: usize,
    pub winner: Firm,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Tally {
    visits: Vec<u64>,
    wins_a: Vec<u64>,
    /// `periods × states`, row-major.
    occupancy: Vec<u64>,
    first_a_wins: u64,
    cap_time_sum: u64,
    cap_reached: u64,
    leader_switches: u64,
    first_winner_ahead: u64,
    first_winner_lead_sum: i64,
    retained: u64,
    transitions: u64,
}

impl Tally {
    fn new(states: usize, periods: usize) -> Self {
        Self {
            visits: vec![0; states],
            wins_a: vec![0; states],
            occupancy: vec![0; states * periods],
            ..Self::default()
        }
    }

    fn merge(mut self, other: Self) -> Self {
        let add = |a: &mut Vec<u64>, b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.visits, &other.visits);
        add(&mut self.wins_a, &other.wins_a);
        add(&mut self.occupancy, &other.occupancy);
        self.first_a_wins += other.first_a_wins;
        self.cap_time_sum += other.cap_time_sum;
        self.cap_reached += other.cap_reached;
        self.leader_switches += other.leader_switches;
        self.first_winner_ahead += other.first_winner_ahead;
        self.first_winner_lead_sum += other.first_winner_lead_sum;
        self.retained += other.retained;
        self.transitions += other.transitions;
        self
    }
}

/// Aggregated outcome of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub model: SimModel,
    pub periods: usize,
    pub replications: usize,
    pub seed: u64,
    m: usize,
    solved_q: Vec<f64>,
    tally: Tally,
    pub trajectories: Option<Vec<TrajectoryRow>>,
}

fn stream_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

pub fn simulate(policy: &Policy<'_>, cfg: &SimConfig) -> Result<SimResult> {
    if cfg.periods == 0 || cfg.replications == 0 {
        return Err(Error::invalid(
            "periods and replications must be at least 1",
        ));
    }
    let m = match policy {
        Policy::Lbd(eq) => {
            let m = eq.m();
            if cfg.initial.0 > m || cfg.initial.1 > m {
                return Err(Error::invalid(format!(
                    "initial state {:?} lies outside the grid 0..={m}",
                    cfg.initial
                )));
            }
            m
        }
        Policy::Switching { .. } => 1,
    };
    let states = policy.state_count();
    let run = |rep: usize, tally: &mut Tally, traj: Option<&mut Vec<TrajectoryRow>>| {
        let mut rng = stream_rng(cfg.seed, rep);
        match policy {
            Policy::Lbd(eq) => run_lbd(eq, cfg, rep, &mut rng, tally, traj),
            Policy::Switching { eq, dist } => {
                run_switching(eq, dist, cfg, rep, &mut rng, tally, traj)
            }
        }
    };

    let (tally, trajectories) = if cfg.keep_trajectories {
        let per_rep: Vec<(Tally, Vec<TrajectoryRow>)> = map_reps(cfg.replications, |rep| {
            let mut t = Tally::new(states, cfg.periods);
            let mut rows = Vec::with_capacity(cfg.periods);
            run(rep, &mut t, Some(&mut rows));
            (t, rows)
        });
        let mut total = Tally::new(states, cfg.periods);
        let mut all = Vec::with_capacity(cfg.replications * cfg.periods);
        for (t, rows) in per_rep {
            total = total.merge(t);
            all.extend(rows);
        }
        (total, Some(all))
    } else {
        let total = fold_reps(
            cfg.replications,
            || Tally::new(states, cfg.periods),
            |mut t, rep| {
                run(rep, &mut t, None);
                t
            },
            Tally::merge,
        );
        (total, None)
    };
    Ok(SimResult {
        model: policy.model(),
        periods: cfg.periods,
        replications: cfg.replications,
        seed: cfg.seed,
        m,
        solved_q: policy.solved_q(),
        tally,
        trajectories,
    })
}

#[cfg(feature = "parallel")]
fn map_reps<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_reps<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn fold_reps<T: Send>(
    n: usize,
    init: impl Fn() -> T + Sync + Send,
    step: impl Fn(T, usize) -> T + Sync + Send,
    merge: impl Fn(T, T) -> T + Sync + Send,
) -> T {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .fold(&init, &step)
        .reduce(&init, merge)
}

#[cfg(not(feature = "parallel"))]
fn fold_reps<T>(
    n: usize,
    init: impl Fn() -> T,
    step: impl Fn(T, usize) -> T,
    _merge: impl Fn(T, T) -> T,
) -> T {
    (0..n).fold(init(), step)
}

fn run_lbd(
    eq: &LbdEquilibrium,
    cfg: &SimConfig,
    rep: usize,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
    mut traj: Option<&mut Vec<TrajectoryRow>>,
) {
    let m = eq.m();
    let n = m + 1;
    let dist = eq.params().dist();
    let states = n * n;
    let (mut a, mut b) = cfg.initial;
    // uncapped cumulative sales
    let (mut sales_a, mut sales_b) = (a as i64, b as i64);
    let mut first_winner = Firm::A;
    let mut last_leader = 0i64;
    let mut cap_reached = a == m && b == m;
    for t in 0..cfg.periods {
        let s = a * n + b;
        tally.occupancy[t * states + s] += 1;
        tally.visits[s] += 1;
        let row = eq.get(a, b);
        let a_wins = if cfg.sample_shocks {
            dist.sample(rng) >= row.price_gap
        } else {
            rng.random::<f64>() < row.win_prob
        };
        let winner = if a_wins { Firm::A } else { Firm::B };
        if let Some(rows) = traj.as_deref_mut() {
            rows.push(TrajectoryRow {
                rep,
                period: t + 1,
                i: a,
                j: b,
                winner,
            });
        }
        if a_wins {
            tally.wins_a[s] += 1;
            sales_a += 1;
            a = (a + 1).min(m);
        } else {
            sales_b += 1;
            b = (b + 1).min(m);
        }
        if t == 0 {
            first_winner = winner;
            tally.first_a_wins += u64::from(a_wins);
        }
        let leader = (sales_a - sales_b).signum();
        if leader != 0 {
            if last_leader != 0 && leader != last_leader {
                tally.leader_switches += 1;
            }
            last_leader = leader;
        }
        if !cap_reached && a == m && b == m {
            cap_reached = true;
            tally.cap_reached += 1;
            tally.cap_time_sum += (t + 1) as u64;
        }
    }
    let lead = match first_winner {
        Firm::A => sales_a - sales_b,
        Firm::B => sales_b - sales_a,
    };
    tally.first_winner_lead_sum += lead;
    tally.first_winner_ahead += u64::from(lead > 0);
}

fn run_switching(
    eq: &SwitchingEquilibrium,
    dist: &ShockDistribution,
    cfg: &SimConfig,
    rep: usize,
    rng: &mut ChaCha8Rng,
    tally: &mut Tally,
    mut traj: Option<&mut Vec<TrajectoryRow>>,
) {
    // state 0: A is the insider
    let mut insider = Firm::A;
    for t in 0..cfg.periods {
        let s = match insider {
            Firm::A => 0,
            Firm::B => 1,
        };
        tally.occupancy[t * 2 + s] += 1;
        tally.visits[s] += 1;
        let retained = if cfg.sample_shocks {
            dist.sample(rng) >= eq.x
        } else {
            rng.random::<f64>() < eq.q1
        };
        let winner = match (insider, retained) {
            (Firm::A, true) | (Firm::B, false) => Firm::A,
            _ => Firm::B,
        };
        if let Some(rows) = traj.as_deref_mut() {
            rows.push(TrajectoryRow {
                rep,
                period: t + 1,
                i: usize::from(insider == Firm::A),
                j: usize::from(insider == Firm::B),
                winner,
            });
        }
        if winner == Firm::A {
            tally.wins_a[s] += 1;
        }
        if t == 0 {
            tally.first_a_wins += u64::from(winner == Firm::A);
        }
        tally.retained += u64::from(retained);
        tally.transitions += 1;
        insider = winner;
    }
}

/// Empirical against solved win probability of firm A in one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateWinRate {
    pub i: usize,
    pub j: usize,
    pub visits: u64,
    pub wins: u64,
    pub empirical: f64,
    pub solved: f64,
    /// Binomial standard error `sqrt(q(1 − q)/n)` at the solved `q`.
    pub std_error: f64,
}

impl StateWinRate {
    /// Empirical rate lies within `k` standard errors of the solved rate.
    pub fn within(&self, k: f64) -> bool {
        (self.empirical - self.solved).abs() <= k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceStats {
    /// Probability that the period-1 winner ends with strictly more sales.
    pub first_winner_ahead: f64,
    pub std_error: f64,
    /// Mean final sales lead of the period-1 winner.
    pub mean_lead: f64,
    /// Mean lead gained after period 1 (`mean_lead − 1`).
    pub mean_lead_gain: f64,
    /// Share of replications in which firm A won period 1.
    pub first_period_win_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub model: SimModel,
    pub periods: usize,
    pub replications: usize,
    pub seed: u64,
    pub first_period_win_rate_a: f64,
    pub state_occupancy: Vec<f64>,
    pub win_rates: Vec<StateWinRate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_time_to_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap_reached_share: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_leader_switches: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance: Option<DominanceStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retention_rate: Option<f64>,
}

impl SimResult {
    fn states(&self) -> usize {
        self.tally.visits.len()
    }

    fn state_label(&self, s: usize) -> (usize, usize) {
        match self.model {
            SimModel::Lbd => (s / (self.m + 1), s % (self.m + 1)),
            SimModel::Switching => (usize::from(s == 0), usize::from(s == 1)),
        }
    }

    /// Share of replications in each state at the start of each period.
    pub fn occupancy_frequencies(&self) -> Vec<Vec<f64>> {
        let r = self.replications as f64;
        self.tally
            .occupancy
            .chunks(self.states())
            .map(|row| row.iter().map(|&c| c as f64 / r).collect())
            .collect()
    }

    /// Share of all replication-periods spent in each state.
    pub fn state_occupancy(&self) -> Vec<f64> {
        let total = (self.replications * self.periods) as f64;
        self.tally
            .visits
            .iter()
            .map(|&v| v as f64 / total)
            .collect()
    }

    pub fn win_rates(&self) -> Vec<StateWinRate> {
        (0..self.states())
            .map(|s| {
                let (i, j) = self.state_label(s);
                let visits = self.tally.visits[s];
                let wins = self.tally.wins_a[s];
                let q = self.solved_q[s];
                let n = visits.max(1) as f64;
                StateWinRate {
                    i,
                    j,
                    visits,
                    wins,
                    empirical: if visits == 0 {
                        f64::NAN
                    } else {
                        wins as f64 / n
                    },
                    solved: q,
                    std_error: (q * (1.0 - q) / n).sqrt(),
                }
            })
            .collect()
    }

    pub fn first_period_win_rate(&self) -> f64 {
        self.tally.first_a_wins as f64 / self.replications as f64
    }

    /// Mean periods until both firms reach the cap, over replications that did.
    pub fn mean_time_to_cap(&self) -> Option<f64> {
        (self.model == SimModel::Lbd && self.tally.cap_reached > 0)
            .then(|| self.tally.cap_time_sum as f64 / self.tally.cap_reached as f64)
    }

    pub fn mean_leader_switches(&self) -> Option<f64> {
        (self.model == SimModel::Lbd)
            .then(|| self.tally.leader_switches as f64 / self.replications as f64)
    }

    /// Share of periods in which the insider kept the buyer.
    pub fn retention_rate(&self) -> Option<f64> {
        (self.model == SimModel::Switching)
            .then(|| self.tally.retained as f64 / self.tally.transitions as f64)
    }

    pub fn dominance_statistics(&self) -> Option<DominanceStats> {
        if self.model != SimModel::Lbd {
            return None;
        }
        let r = self.replications as f64;
        let p = self.tally.first_winner_ahead as f64 / r;
        let mean_lead = self.tally.first_winner_lead_sum as f64 / r;
        Some(DominanceStats {
            first_winner_ahead: p,
            std_error: (p * (1.0 - p) / r).sqrt(),
            mean_lead,
            mean_lead_gain: mean_lead - 1.0,
            first_period_win_rate: self.first_period_win_rate(),
        })
    }

    pub fn summary(&self) -> SimSummary {
        let lbd = self.model == SimModel::Lbd;
        SimSummary {
            model: self.model,
            periods: self.periods,
            replications: self.replications,
            seed: self.seed,
            first_period_win_rate_a: self.first_period_win_rate(),
            state_occupancy: self.state_occupancy(),
            win_rates: self.win_rates(),
            mean_time_to_cap: self.mean_time_to_cap(),
            cap_reached_share: lbd
                .then(|| self.tally.cap_reached as f64 / self.replications as f64),
            mean_leader_switches: self.mean_leader_switches(),
            dominance: self.dominance_statistics(),
            retention_rate: self.retention_rate(),
        }
    }
}
