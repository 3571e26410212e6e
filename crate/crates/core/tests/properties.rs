use proptest::prelude::*;

use oligodyn::lbd::{solve_backward, solve_two_step};
use oligodyn::scalar_root::RootProblem;
use oligodyn::sim::{simulate, Policy, SimConfig};
use oligodyn::switching::{average_price, solve_switching, weighted_average_price};
use oligodyn::{LbdParams, ShockDistribution, SolverConfig, SwitchingParams};

fn dist(logistic: bool) -> ShockDistribution {
    if logistic {
        ShockDistribution::standard_logistic()
    } else {
        ShockDistribution::standard_normal()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn motion_is_odd_and_increasing(x in -30.0f64..30.0, dx in 1e-3f64..1.0, logistic: bool) {
        let d = dist(logistic);
        let k = d.motion(x);
        prop_assert!((k + d.motion(-x)).abs() <= 1e-9 * (1.0 + k.abs()));
        prop_assert!(d.motion(x + dx) > k);
    }

    #[test]
    fn static_profit_decreasing(x in -8.0f64..8.0, dx in 1e-3f64..1.0, logistic: bool) {
        let d = dist(logistic);
        prop_assert!(d.static_profit(x) >= 0.0);
        prop_assert!(d.static_profit(x + dx) < d.static_profit(x));
    }

    #[test]
    fn cdf_complement(x in -40.0f64..40.0, logistic: bool) {
        let d = dist(logistic);
        prop_assert!((d.cdf(x) + d.cdf(-x) - 1.0).abs() <= 1e-12);
        prop_assert!((d.pdf(x) - d.pdf(-x)).abs() <= 1e-15);
    }

    #[test]
    fn bisection_meets_tolerance(a in 0.01f64..50.0, root in -500.0f64..500.0, tol in 1e-12f64..1e-4) {
        let res = RootProblem::new(|x| a * (x - root) + (x - root).powi(3))
            .tolerance(tol)
            .solve()
            .unwrap();
        prop_assert!(res.residual_at_root.abs() <= tol);
        prop_assert!((res.root - root).abs() <= tol / a + 1e-9);
    }

    #[test]
    fn switching_identities(s in 0.0f64..20.0, delta in 0.0f64..0.99, logistic: bool) {
        let eq = solve_switching(&SwitchingParams::new(s, delta, dist(logistic)).unwrap(), &SolverConfig::default()).unwrap();
        prop_assert!(eq.x <= 0.0);
        prop_assert!(eq.q1 >= 0.5 && (eq.q1 + eq.q0 - 1.0).abs() <= 1e-12);
        prop_assert!((eq.p1 - eq.p0 - s - eq.x).abs() <= 1e-12 * (1.0 + eq.p1.abs()));
        prop_assert!((average_price(&eq) - weighted_average_price(&eq)).abs() <= 1e-8);
    }

    #[test]
    fn lbd_sign_rule_and_bellman(c1 in 0.0f64..1.0, c2_frac in 0.0f64..1.0, delta in 0.0f64..0.95, logistic: bool) {
        let costs = vec![1.0, c1, c1 * c2_frac];
        let p = LbdParams::new(costs, delta, dist(logistic)).unwrap();
        let eq = solve_backward(&p, &SolverConfig::default()).unwrap();
        for r in eq.rows() {
            prop_assert!(eq.bellman_residual(r.i, r.j).abs() <= 1e-8);
            let drive = r.cost_gap - delta * r.big_w;
            if drive.abs() > 1e-8 {
                prop_assert_eq!(r.price_gap > 0.0, drive > 0.0);
            }
            prop_assert!((eq.price_gap(r.i, r.j) + eq.price_gap(r.j, r.i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_step_matches_backward(c1 in 0.0f64..1.0, delta in 0.0f64..0.95, logistic: bool) {
        let p = LbdParams::new(vec![1.0, c1], delta, dist(logistic)).unwrap();
        let cfg = SolverConfig::default();
        let b = solve_backward(&p, &cfg).unwrap();
        let (t, _) = solve_two_step(&p, &cfg).unwrap();
        prop_assert!(b.sup_distance_all(&t) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_reproducible(seed: u64, shocks: bool) {
        let p = LbdParams::new(vec![1.0, 0.7, 0.5], 0.8, ShockDistribution::standard_normal()).unwrap();
        let eq = solve_backward(&p, &SolverConfig::default()).unwrap();
        let cfg = SimConfig { periods: 12, replications: 300, seed, keep_trajectories: true, sample_shocks: shocks, ..SimConfig::default() };
        let a = simulate(&Policy::Lbd(&eq), &cfg).unwrap();
        let b = simulate(&Policy::Lbd(&eq), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
