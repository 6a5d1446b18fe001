mod common;

use consent_core::equilibrium::{evaluate, full_learning_benchmark};
use consent_core::oracle::{brute_force_best_test, discretize};
use consent_core::solver_single::{solve_general, solve_interval, solve_tail, solve_threshold};
use consent_core::{Alignment, BinaryTest, Environment};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_test(rng: &mut ChaCha8Rng) -> BinaryTest {
    let k = rng.gen_range(1..=3);
    let mut cuts: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    cuts.sort_by(f64::total_cmp);
    let pieces = cuts.chunks(2).map(|c| (c[0], c[1])).filter(|c| c.1 > c.0).collect();
    BinaryTest::new(pieces, -1.0, 1.0).unwrap()
}

fn trusted_payoff(t: &BinaryTest, env: &Environment) -> f64 {
    let e = evaluate(t, env).unwrap();
    if e.trustworthy {
        e.principal_payoff
    } else {
        0.0
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solver_beats_random_tests(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(3..=10);
        let (env, _) = common::step_env(&mut rng, n);
        let best = solve_general(&env).unwrap().payoff;
        for _ in 0..200 {
            let t = random_test(&mut rng);
            prop_assert!(trusted_payoff(&t, &env) <= best + 1e-9);
        }
    }

    #[test]
    fn solver_matches_oracle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(3..=12);
        let (env, edges) = common::step_env(&mut rng, n);
        let s = solve_general(&discretize(&env, &edges).unwrap()).unwrap();
        let o = brute_force_best_test(&env, &edges).unwrap();
        prop_assert!((s.payoff - o.payoff).abs() <= 1e-9, "{} vs {}", s.payoff, o.payoff);
    }

    #[test]
    fn optimum_is_trustworthy_and_beats_full_learning(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(3..=12);
        let (env, _) = common::step_env(&mut rng, n);
        let s = solve_general(&env).unwrap();
        prop_assert!(s.eval.trustworthy);
        prop_assert!((s.eval.principal_payoff - s.payoff).abs() < 1e-12);
        let b = full_learning_benchmark(&env).unwrap();
        if b.trustworthy {
            prop_assert!(s.payoff >= b.principal_payoff - 1e-12);
        }
    }

    #[test]
    fn pessimistic_agents_reject_every_test(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (env, _) = common::linear_env(&mut rng, 6, |m| (-0.95, m));
        for _ in 0..1000 {
            let t = random_test(&mut rng);
            prop_assert_eq!(trusted_payoff(&t, &env), 0.0);
        }
    }

    #[test]
    fn restricted_solvers_agree_with_general(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(6..=12);
        for (alignment, solve) in [
            (Alignment::Positive, solve_threshold as fn(&Environment) -> _),
            (Alignment::NegativeConcave, solve_interval),
            (Alignment::NegativeConvex, solve_tail),
        ] {
            let (env, _) = common::shaped_env(&mut rng, n, alignment);
            let g = solve_general(&env).unwrap();
            let r = solve(&env).unwrap();
            prop_assert!((g.payoff - r.payoff).abs() <= 1e-7, "{alignment}: {} vs {}", g.payoff, r.payoff);
        }
    }
}

#[test]
fn oracle_is_deterministic() {
    let mut rng = common::rng(3);
    let (env, edges) = common::step_env(&mut rng, 12);
    let a = brute_force_best_test(&env, &edges).unwrap();
    let b = brute_force_best_test(&env, &edges).unwrap();
    assert_eq!(a.best_test, b.best_test);
    assert_eq!(a.payoff, b.payoff);
}
