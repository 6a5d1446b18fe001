//! Random environments for the integration suites.
#![allow(dead_code)]

use consent_core::model::linear_environment;
use consent_core::{
    AgentPayoff, Alignment, Environment, PayoffSpec, PiecewiseLinear, StateDistribution, TypePrior,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sorted cell edges on `[lo, hi]` with cells no narrower than a fifth of
/// the average.
pub fn random_edges(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut edges = vec![lo];
    let mut acc = 0.0;
    for x in &w[..n - 1] {
        acc += x;
        edges.push(lo + (hi - lo) * acc / total);
    }
    edges.push(hi);
    edges
}

pub fn random_density(rng: &mut ChaCha8Rng, edges: &[f64]) -> StateDistribution {
    let w: Vec<f64> = (1..edges.len()).map(|_| rng.gen_range(0.2..2.0)).collect();
    StateDistribution::from_weights(edges.to_vec(), &w).unwrap()
}

/// Step values in `[-1, 1]` with at least one of each sign.
fn mixed_steps(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().any(|&x| x < -0.05) && v.iter().any(|&x| x > 0.05) {
            return v;
        }
    }
}

/// Between one and three types strictly inside `(a, b)`.
pub fn random_types(rng: &mut ChaCha8Rng, a: f64, b: f64) -> TypePrior {
    let k = rng.gen_range(1..=3);
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    while atoms.len() < k {
        let lam = a + (b - a) * rng.gen_range(0.05..0.95);
        if atoms.iter().all(|x| (x.0 - lam).abs() > 1e-3 * (b - a)) {
            atoms.push((lam, rng.gen_range(0.1..1.0)));
        }
    }
    let total: f64 = atoms.iter().map(|x| x.1).sum();
    for x in &mut atoms {
        x.1 /= total;
    }
    let rest: f64 = atoms[1..].iter().map(|x| x.1).sum();
    atoms[0].1 = 1.0 - rest;
    TypePrior::new(atoms).unwrap()
}

/// A step environment on an `n`-cell grid: step density, step `u` of both
/// signs and `v(θ, λ) = λ + b(θ)` with step `b`; every type's `v` takes both
/// signs. Returns the grid too.
pub fn step_env(rng: &mut ChaCha8Rng, n: usize) -> (Environment, Vec<f64>) {
    let edges = random_edges(rng, -1.0, 1.0, n);
    let states = random_density(rng, &edges);
    let u = PiecewiseLinear::steps(edges.clone(), mixed_steps(rng, n)).unwrap();
    let b = mixed_steps(rng, n);
    let (bmin, bmax) = b.iter().fold((f64::MAX, f64::MIN), |(a, c), &x| (a.min(x), c.max(x)));
    let types = random_types(rng, -bmax, -bmin);
    let base = PiecewiseLinear::steps(edges.clone(), b).unwrap();
    let env = Environment {
        states,
        payoffs: PayoffSpec {
            u,
            v: AgentPayoff::shifted(base),
            alignment: Alignment::General,
        },
        types,
    };
    (env, edges)
}

/// `u = θ` and `v = λ + b(θ)` with `b` increasing, concave decreasing or
/// convex decreasing, on a random step density over `n` cells.
pub fn shaped_env(rng: &mut ChaCha8Rng, n: usize, alignment: Alignment) -> (Environment, Vec<f64>) {
    let edges = random_edges(rng, -1.0, 1.0, n);
    let states = random_density(rng, &edges);
    let c = rng.gen_range(0.3..2.0);
    let d = rng.gen_range(0.0..0.45) * c;
    let f = move |x: f64| match alignment {
        Alignment::Positive => c * x + d * x * x.abs(),
        Alignment::NegativeConcave => -c * x - d * x * x,
        Alignment::NegativeConvex => -c * x + d * x * x,
        Alignment::General => unreachable!(),
    };
    let base = PiecewiseLinear::interpolate(-1.0, 1.0, 16, f);
    let (bmin, bmax) = (base.inf(), base.sup());
    let types = random_types(rng, -bmax, -bmin);
    let env = Environment {
        states,
        payoffs: PayoffSpec {
            u: PiecewiseLinear::identity(-1.0, 1.0),
            v: AgentPayoff::shifted(base),
            alignment,
        },
        types,
    };
    (env, edges)
}

/// Linear environment `u = θ`, `v = λ - θ` on a random step density over
/// `[-1, 1]`; types are drawn from `range(E[θ])`.
pub fn linear_env(
    rng: &mut ChaCha8Rng,
    cells: usize,
    range: impl Fn(f64) -> (f64, f64),
) -> (Environment, Vec<f64>) {
    let edges = random_edges(rng, -1.0, 1.0, cells);
    let states = random_density(rng, &edges);
    let (a, b) = range(consent_core::measure::mean(&states));
    let types = random_types(rng, a, b);
    (linear_environment(states, types), edges)
}
