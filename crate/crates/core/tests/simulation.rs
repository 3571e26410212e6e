use oligodyn::lbd::solve_backward;
use oligodyn::sim::{simulate, Policy, SimConfig};
use oligodyn::switching::solve_switching;
use oligodyn::{LbdParams, ShockDistribution, SolverConfig, SwitchingParams};

fn lbd(costs: &[f64], delta: f64) -> oligodyn::LbdEquilibrium {
    let p = LbdParams::new(costs.to_vec(), delta, ShockDistribution::standard_normal()).unwrap();
    solve_backward(&p, &SolverConfig::default()).unwrap()
}

#[test]
fn symmetric_single_period_split() {
    let eq = lbd(&[1.0, 1.0], 0.9);
    let cfg = SimConfig {
        periods: 1,
        replications: 100_000,
        seed: 5,
        ..SimConfig::default()
    };
    let res = simulate(&Policy::Lbd(&eq), &cfg).unwrap();
    assert!((res.first_period_win_rate() - 0.5).abs() <= 0.005);
    let d = res.dominance_statistics().unwrap();
    assert_eq!(d.first_winner_ahead, 1.0);
}

#[test]
fn leader_first_period_rate_matches_solved_q() {
    let eq = lbd(&[1.0, 0.5], 0.9);
    let q = eq.win_prob(1, 0);
    let cfg = SimConfig {
        periods: 1,
        replications: 100_000,
        seed: 17,
        initial: (1, 0),
        ..SimConfig::default()
    };
    let rate = simulate(&Policy::Lbd(&eq), &cfg)
        .unwrap()
        .first_period_win_rate();
    let se = (q * (1.0 - q) / 1e5).sqrt();
    assert!((rate - q).abs() <= 3.0 * se, "{rate} vs {q}");
}

#[test]
fn steep_learning_rewards_the_first_sale() {
    let cfg = SimConfig {
        periods: 30,
        replications: 50_000,
        seed: 8,
        ..SimConfig::default()
    };
    let steep = simulate(&Policy::Lbd(&lbd(&[1.0, 0.25], 0.9)), &cfg)
        .unwrap()
        .dominance_statistics()
        .unwrap();
    assert!(steep.first_winner_ahead > 0.5 + 3.0 * steep.std_error);

    // With equal costs the lead after the first sale is a fair random walk.
    let flat = simulate(&Policy::Lbd(&lbd(&[1.0, 1.0], 0.9)), &cfg)
        .unwrap()
        .dominance_statistics()
        .unwrap();
    let walk_sd = ((cfg.periods - 1) as f64 / cfg.replications as f64).sqrt();
    assert!(flat.mean_lead_gain.abs() <= 3.0 * walk_sd, "{flat:?}");
    assert!(steep.mean_lead_gain > flat.mean_lead_gain + 3.0 * walk_sd);
}

#[test]
fn large_switching_cost_retains_insider() {
    let d = ShockDistribution::standard_normal();
    let cfg = SimConfig {
        periods: 50,
        replications: 4000,
        seed: 1,
        ..SimConfig::default()
    };
    let at = |s: f64| {
        let eq = solve_switching(
            &SwitchingParams::new(s, 0.9, d.clone()).unwrap(),
            &SolverConfig::default(),
        )
        .unwrap();
        let rate = simulate(&Policy::Switching { eq: &eq, dist: &d }, &cfg)
            .unwrap()
            .retention_rate()
            .unwrap();
        (rate, eq.q1)
    };
    let (rate, q1) = at(10.0);
    let n = (cfg.periods * cfg.replications) as f64;
    assert!((rate - q1).abs() <= 3.0 * (q1 * (1.0 - q1) / n).sqrt());
    let (rate, _) = at(40.0);
    assert!(rate > 0.99, "{rate}");
}
