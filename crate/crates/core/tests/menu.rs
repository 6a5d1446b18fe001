mod common;

use consent_core::measure::{fit_interval, max_feasible_p, mean};
use consent_core::oracle::brute_force_menu;
use consent_core::solver_menu::{check_menu_incentives, solve_menu_linear, solve_single_linear};
use consent_core::{presets, BinaryTest, Environment};
use proptest::prelude::*;
use rand::Rng;

fn env_from(seed: u64) -> Environment {
    let mut rng = common::rng(seed);
    let cells = rng.gen_range(2..=8);
    common::linear_env(&mut rng, cells, |_| (-0.9, 0.9)).0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn menu_weakly_beats_single_test(seed in any::<u64>()) {
        let env = env_from(seed);
        let menu = solve_menu_linear(&env).unwrap();
        let single = solve_single_linear(&env).unwrap();
        prop_assert!(menu.payoff >= single.payoff - 1e-9, "{} < {}", menu.payoff, single.payoff);
    }

    #[test]
    fn menu_passes_its_own_checks(seed in any::<u64>()) {
        let env = env_from(seed);
        let menu = solve_menu_linear(&env).unwrap();
        let v = check_menu_incentives(&menu.schedule, &env);
        prop_assert!(v.is_empty(), "{:?}", v);
    }

    #[test]
    fn menu_is_monotone(seed in any::<u64>()) {
        let env = env_from(seed);
        let menu = solve_menu_linear(&env).unwrap();
        let mut last_p = 0.0;
        let mut last_value = 0.0;
        for k in 0..env.types.len() {
            let (p, value) = match menu.schedule.entry_for(k) {
                Some(e) => (e.p, e.p * (e.lambda - e.mu)),
                None => (0.0, 0.0),
            };
            prop_assert!(p >= last_p - 1e-4, "p falls at type {k}");
            prop_assert!(value >= -1e-9, "type {k} loses {value}");
            prop_assert!(value >= last_value - 1e-9, "agent value falls at type {k}");
            last_p = p;
            last_value = value;
        }
    }
}

/// Random feasible `(p, μ)` points as interval tests.
fn random_pool(env: &Environment, rng: &mut impl Rng, n: usize) -> Vec<BinaryTest> {
    let m = mean(&env.states);
    let mut pool = Vec::new();
    while pool.len() < n {
        let mu = rng.gen_range(m.max(-0.99)..0.99);
        let top = max_feasible_p(mu, &env.states).unwrap();
        let p = rng.gen_range(0.05..1.0) * top;
        if let Ok(t) = fit_interval(p, mu, &env.states) {
            pool.push(t);
        }
    }
    pool
}

#[test]
fn no_pooled_menu_beats_the_solver() {
    let mut rng = common::rng(91);
    for _ in 0..10 {
        let (env, _) = common::linear_env(&mut rng, 6, |_| (-0.9, 0.9));
        let menu = solve_menu_linear(&env).unwrap();
        let mut pool: Vec<BinaryTest> = menu.schedule.entries.iter().map(|e| e.test.clone()).collect();
        pool.dedup();
        let own = brute_force_menu(&env, &pool).unwrap();
        assert!((own.payoff - menu.payoff).abs() < 1e-7, "{} vs {}", own.payoff, menu.payoff);
        let extra = 12 - pool.len();
        pool.extend(random_pool(&env, &mut rng, extra));
        let o = brute_force_menu(&env, &pool).unwrap();
        assert!(o.payoff <= menu.payoff + 1e-7, "pool {} beats solver {}", o.payoff, menu.payoff);
    }
}

#[test]
fn pessimistic_types_get_nothing() {
    let mut rng = common::rng(92);
    for _ in 0..10 {
        let (env, _) = common::linear_env(&mut rng, 5, |m| (-0.95, m));
        assert_eq!(solve_menu_linear(&env).unwrap().payoff, 0.0);
    }
}

#[test]
fn two_type_menu_separates_types() {
    let r = solve_menu_linear(&presets::menu51(0.01).unwrap()).unwrap();
    assert_eq!(r.schedule.distinct_tests(1e-6), 2);
    assert!(r.fsb_binds_at_top);
    let (lo, hi) = (r.schedule.entry_for(0).unwrap(), r.schedule.entry_for(1).unwrap());
    assert!(lo.p < hi.p);
    // the low type's pricing binds
    assert!((lo.mu - lo.lambda).abs() < 1e-8);
}
