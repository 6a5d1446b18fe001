mod common;

use consent_core::extensions::{
    pivotal_prior, rich_best_action, solve_multi_agent, verify_rich_binary_sufficiency, RichActionSpec,
};
use consent_core::solver_single::solve_general;
use consent_core::TypePrior;
use proptest::prelude::*;
use rand::Rng;

/// Distribution of the minimum by enumerating every joint draw.
fn min_by_enumeration(priors: &[TypePrior]) -> Vec<(f64, f64)> {
    let mut joint = vec![(f64::INFINITY, 1.0)];
    for p in priors {
        joint = joint
            .iter()
            .flat_map(|&(m, w)| p.atoms.iter().map(move |&(l, q)| (m.min(l), w * q)))
            .collect();
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    joint.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (x, w) in joint {
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => out.push((x, w)),
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pivotal_prior_matches_enumeration(seed in any::<u64>(), agents in 1usize..4) {
        let mut rng = common::rng(seed);
        let priors: Vec<TypePrior> = (0..agents).map(|_| common::random_types(&mut rng, -1.0, 1.0)).collect();
        let got = pivotal_prior(&priors).unwrap();
        let want = min_by_enumeration(&priors);
        prop_assert_eq!(got.atoms.len(), want.len());
        for (a, b) in got.atoms.iter().zip(&want) {
            prop_assert_eq!(a.0, b.0);
            prop_assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn best_action_rises_with_the_posterior(lam in -1.0f64..1.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let spec = RichActionSpec::quadratic(0.05, 2.0).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rich_best_action(lo, lam, &spec).unwrap() <= rich_best_action(hi, lam, &spec).unwrap());
    }

    #[test]
    fn best_action_rises_with_the_type(mu in -1.0f64..1.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let spec = RichActionSpec::quadratic(0.05, 2.0).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rich_best_action(mu, lo, &spec).unwrap() <= rich_best_action(mu, hi, &spec).unwrap());
    }
}

#[test]
fn rich_binary_sufficiency_on_small_grids() {
    let spec = RichActionSpec::quadratic(0.05, 2.0).unwrap();
    let mut rng = common::rng(71);
    for i in 0..50 {
        let n = rng.gen_range(3..=6);
        let (env, edges) = common::step_env(&mut rng, n);
        let r = verify_rich_binary_sufficiency(&env, &spec, &edges, 3, 20, i).unwrap();
        assert!(r.exhaustive);
        assert!(r.holds(), "env {i}: binary {} < {}", r.binary_payoff, r.max_general_payoff);
    }
}

#[test]
fn one_agent_is_the_single_agent_problem() {
    let mut rng = common::rng(72);
    let (env, _) = common::step_env(&mut rng, 8);
    let a = solve_multi_agent(&env, std::slice::from_ref(&env.types)).unwrap();
    let b = solve_general(&env).unwrap();
    assert_eq!(a.payoff, b.payoff);
}

#[test]
fn more_agents_never_help() {
    let mut rng = common::rng(73);
    for _ in 0..10 {
        let (env, _) = common::step_env(&mut rng, 8);
        let one = solve_multi_agent(&env, std::slice::from_ref(&env.types)).unwrap().payoff;
        let two = solve_multi_agent(&env, &[env.types.clone(), env.types.clone()]).unwrap().payoff;
        assert!(two <= one + 1e-12, "{two} > {one}");
    }
}
