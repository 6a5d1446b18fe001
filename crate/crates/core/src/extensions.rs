//! Several agents, and agents with more than two actions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{misreports, CellIntegrals, GeneralEvalReport, SignalIntegrals, SignalReport};
use crate::model::{Environment, GeneralTest, TypePrior};
use crate::oracle::{SufficiencyReport, EXHAUSTIVE_CELLS};
use crate::solver_single::{solve_general, SolveReport};
use crate::{Error, Result};

/// Distribution of the smallest of independent draws from `priors`.
///
/// `Pr[min ≥ x] = Π_i Pr[λ_i ≥ x]` on the union of the supports.
pub fn pivotal_prior(priors: &[TypePrior]) -> Result<TypePrior> {
    if priors.is_empty() {
        return Err(Error::Invalid("at least one type prior needed".into()));
    }
    let mut support: Vec<f64> = priors.iter().flat_map(|p| p.lambdas()).collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let survival = |x: f64| -> f64 {
        priors
            .iter()
            .map(|p| p.atoms.iter().filter(|a| a.0 >= x).map(|a| a.1).sum::<f64>())
            .product()
    };
    let s: Vec<f64> = support.iter().map(|&x| survival(x)).collect();
    let atoms = support
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, s[i] - s.get(i + 1).copied().unwrap_or(0.0)))
        .filter(|a| a.1 > 0.0)
        .collect();
    TypePrior::new(atoms)
}

/// Optimal test when every agent in `priors` must consent. All agents share
/// the payoff family of `env`, so it must be affine in `λ` unless there is a
/// single agent.
pub fn solve_multi_agent(env: &Environment, priors: &[TypePrior]) -> Result<SolveReport> {
    if priors.len() > 1 && !env.payoffs.v.is_affine() {
        return Err(Error::Invalid(
            "agents must share an agent payoff that is affine in λ".into(),
        ));
    }
    solve_general(&env.with_types(pivotal_prior(priors)?))
}

/// Agent payoff when taking action `a` in state `θ`:
/// `ṽ(θ, λ, a) = intercept(λ, a) + slope(λ, a) · θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RichPayoff {
    /// `(θ + λ) a - a² / 2`.
    Quadratic,
    /// Rows indexed by type value, columns by action.
    Table {
        lambdas: Vec<f64>,
        intercept: Vec<Vec<f64>>,
        slope: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichActionSpec {
    /// Ascending action grid; must contain `0`.
    pub actions: Vec<f64>,
    pub payoff: RichPayoff,
}

impl RichActionSpec {
    /// Quadratic payoff on `{0, step, 2 step, …, max}`.
    pub fn quadratic(step: f64, max: f64) -> Result<Self> {
        if !(step > 0.0) || !(max >= 0.0) {
            return Err(Error::Invalid("action grid needs a positive step".into()));
        }
        let n = (max / step + 1e-9).floor() as usize;
        let spec = Self {
            actions: (0..=n).map(|i| i as f64 * step).collect(),
            payoff: RichPayoff::Quadratic,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `(intercept, slope)` of `ṽ(·, λ, actions[i])`.
    fn coefficients(&self, lambda: f64, i: usize) -> Result<(f64, f64)> {
        let a = self.actions[i];
        match &self.payoff {
            RichPayoff::Quadratic => Ok((lambda * a - 0.5 * a * a, a)),
            RichPayoff::Table {
                lambdas,
                intercept,
                slope,
            } => {
                let r = lambdas
                    .iter()
                    .position(|&l| (l - lambda).abs() <= 1e-12)
                    .ok_or_else(|| Error::Invalid(format!("no payoff row for type {lambda}")))?;
                Ok((intercept[r][i], slope[r][i]))
            }
        }
    }

    /// Checks the zero action, monotonicity in `θ` and supermodularity on
    /// the grid.
    pub fn validate(&self) -> Result<()> {
        let a = &self.actions;
        if a.windows(2).any(|w| w[1] <= w[0]) || a.first().is_none_or(|&x| x != 0.0) {
            return Err(Error::Invalid(
                "action grid must be strictly increasing and start at 0".into(),
            ));
        }
        let rows: Vec<f64> = match &self.payoff {
            RichPayoff::Quadratic => vec![0.0],
            RichPayoff::Table {
                lambdas,
                intercept,
                slope,
            } => {
                if intercept.len() != lambdas.len()
                    || slope.len() != lambdas.len()
                    || intercept.iter().chain(slope).any(|r| r.len() != a.len())
                {
                    return Err(Error::Invalid("payoff table has the wrong shape".into()));
                }
                lambdas.clone()
            }
        };
        for lam in rows {
            let (c0, s0) = self.coefficients(lam, 0)?;
            if c0 != 0.0 || s0 != 0.0 {
                return Err(Error::Invalid(format!("action 0 must pay 0 (type {lam})")));
            }
            let mut prev = 0.0;
            for i in 1..a.len() {
                let (_, s) = self.coefficients(lam, i)?;
                if !(s > 0.0) {
                    return Err(Error::Invalid(format!(
                        "payoff of action {} must increase in θ (type {lam})",
                        a[i]
                    )));
                }
                if s < prev - 1e-12 {
                    return Err(Error::Invalid(format!(
                        "payoff is not supermodular at action {} (type {lam})",
                        a[i]
                    )));
                }
                prev = s;
            }
        }
        Ok(())
    }
}

/// Best action of type `λ` at posterior mean `μ`; ties go to the larger
/// action.
pub fn rich_best_action(mu: f64, lambda: f64, spec: &RichActionSpec) -> Result<f64> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (i, &a) in spec.actions.iter().enumerate() {
        let (c, s) = spec.coefficients(lambda, i)?;
        let value = c + s * mu;
        if value >= best.0 - 1e-12 {
            best = (value.max(best.0), a);
        }
    }
    Ok(best.1)
}

/// Expected action `Σ_k q_k a*(μ, λ_k)`.
fn expected_action(mu: f64, types: &TypePrior, spec: &RichActionSpec) -> Result<f64> {
    let mut total = 0.0;
    for &(lam, q) in &types.atoms {
        total += q * rich_best_action(mu, lam, spec)?;
    }
    Ok(total)
}

fn rich_kernel(
    cells: &CellIntegrals,
    types: &TypePrior,
    spec: &RichActionSpec,
    kernel: &[Vec<f64>],
    labels: &[String],
) -> Result<GeneralEvalReport> {
    let n = labels.len();
    let sig = SignalIntegrals::new(cells, kernel, n);
    let mut mean_u = vec![0.0; n];
    let mut action = vec![0.0; n];
    for s in (0..n).filter(|&s| sig.prob[s] > 0.0) {
        mean_u[s] = sig.u[s] / sig.prob[s];
        action[s] = expected_action(sig.theta[s] / sig.prob[s], types, spec)?;
    }
    let (best_deviation, truthful_payoff) = misreports(&sig.prob, &mean_u, &action);
    let signals = (0..n)
        .map(|s| SignalReport {
            label: labels[s].clone(),
            prob: sig.prob[s],
            mean_u: (sig.prob[s] > 0.0).then_some(mean_u[s]),
            proposes: sig.prob[s] > 0.0 && mean_u[s] >= 0.0,
            acceptance_prob: action[s],
        })
        .collect();
    Ok(GeneralEvalReport {
        trustworthy: best_deviation.is_none(),
        best_deviation,
        truthful_payoff,
        signals,
    })
}

/// Evaluates a test when the agent picks an action from `spec` after each
/// proposal. The principal earns `E[u | s] · E_λ[a*(μ_s, λ)]` per proposal
/// signal; `acceptance_prob` in the signal reports holds that expected
/// action.
pub fn evaluate_rich(test: &GeneralTest, env: &Environment, spec: &RichActionSpec) -> Result<GeneralEvalReport> {
    spec.validate()?;
    let cells = CellIntegrals::new(env, &test.edges)?;
    rich_kernel(&cells, &env.types, spec, &test.kernel, &test.signals)
}

/// [`crate::oracle::verify_binary_sufficiency`] for agents with actions
/// from `spec`. The binary benchmark is the best trustworthy two-signal
/// deterministic kernel on the grid; multi-signal kernels are deterministic,
/// enumerated for three signals on small grids and sampled otherwise.
pub fn verify_rich_binary_sufficiency(
    env: &Environment,
    spec: &RichActionSpec,
    edges: &[f64],
    signal_count: usize,
    samples: usize,
    seed: u64,
) -> Result<SufficiencyReport> {
    spec.validate()?;
    if signal_count < 2 {
        return Err(Error::Invalid("at least two signals needed".into()));
    }
    let cells = CellIntegrals::new(env, edges)?;
    let n = cells.cells();
    if n > 20 {
        return Err(Error::TooManyCells { cells: n, limit: 20 });
    }
    let run = |k: usize, assignment: &[usize]| -> Result<(GeneralEvalReport, Vec<Vec<f64>>, Vec<String>)> {
        let labels: Vec<String> = (0..k).map(|s| format!("s{s}")).collect();
        let kernel: Vec<Vec<f64>> = assignment
            .iter()
            .map(|&s| {
                let mut row = vec![0.0; k];
                row[s] = 1.0;
                row
            })
            .collect();
        let r = rich_kernel(&cells, &env.types, spec, &kernel, &labels)?;
        Ok((r, kernel, labels))
    };
    let mut binary = 0.0f64;
    for mask in 0usize..(1 << n) {
        let assignment: Vec<usize> = (0..n).map(|i| (mask >> i) & 1).collect();
        let (r, _, _) = run(2, &assignment)?;
        if r.trustworthy {
            binary = binary.max(r.truthful_payoff);
        }
    }
    let k = signal_count;
    let mut report = SufficiencyReport {
        signal_count: k,
        binary_payoff: binary,
        max_general_payoff: 0.0,
        kernels_examined: 0,
        trustworthy_kernels: 0,
        exhaustive: k == 3 && n <= EXHAUSTIVE_CELLS,
        seed,
        witness: None,
    };
    let check = |assignment: &[usize], report: &mut SufficiencyReport| -> Result<()> {
        report.kernels_examined += 1;
        let (r, kernel, labels) = run(k, assignment)?;
        if r.trustworthy {
            report.trustworthy_kernels += 1;
            if r.truthful_payoff > report.max_general_payoff {
                report.max_general_payoff = r.truthful_payoff;
                if r.truthful_payoff > binary + 1e-9 {
                    report.witness = Some(GeneralTest::new(edges.to_vec(), labels, kernel)?);
                }
            }
        }
        Ok(())
    };
    if report.exhaustive {
        let mut digits = vec![0usize; n];
        'outer: loop {
            check(&digits, &mut report)?;
            for d in digits.iter_mut() {
                *d += 1;
                if *d < k {
                    continue 'outer;
                }
                *d = 0;
            }
            break;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        check(&assignment, &mut report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linear_environment, StateDistribution};
    use crate::oracle::uniform_edges;
    use crate::presets;

    #[test]
    fn pivotal_priors() {
        let p = TypePrior::new(vec![(0.2, 0.5), (0.7, 0.5)]).unwrap();
        let r = pivotal_prior(&[p.clone(), p.clone()]).unwrap();
        assert_eq!(r.atoms, vec![(0.2, 0.75), (0.7, 0.25)]);
        assert_eq!(pivotal_prior(std::slice::from_ref(&p)).unwrap(), p);
        let q = TypePrior::new(vec![(1.0 / 3.0, 0.5), (2.0 / 3.0, 0.5)]).unwrap();
        let r = pivotal_prior(&[q.clone(), q.clone(), q]).unwrap();
        assert_eq!(r.atoms, vec![(1.0 / 3.0, 0.875), (2.0 / 3.0, 0.125)]);
        assert!(pivotal_prior(&[]).is_err());
    }

    #[test]
    fn two_agents_pool_to_the_pivotal_type() {
        let eps = 0.01;
        let env = presets::menu51(eps).unwrap();
        let r = solve_multi_agent(&env, &[env.types.clone(), env.types.clone()]).unwrap();
        let hi = (1.0 - eps) * (1.0 - eps);
        let single = solve_general(&env.with_types(
            TypePrior::new(vec![(1.0 / 3.0, 1.0 - hi), (2.0 / 3.0, hi)]).unwrap(),
        ))
        .unwrap();
        assert!((r.payoff - single.payoff).abs() < 1e-12);
        // threshold 0 serves the top type only: (1 - ε)² / 4 beats 2/9
        assert!((r.payoff - hi / 4.0).abs() < 1e-9, "{}", r.payoff);
    }

    #[test]
    fn a_pessimistic_agent_blocks_everything() {
        let env = presets::menu51(0.5).unwrap();
        let gloomy = TypePrior::new(vec![(-0.2, 0.5), (-0.1, 0.5)]).unwrap();
        let r = solve_multi_agent(&env, &[env.types.clone(), gloomy]).unwrap();
        assert_eq!(r.payoff, 0.0);
        assert!(r.best_test.is_empty());
    }

    #[test]
    fn best_actions() {
        let spec = RichActionSpec::quadratic(0.1, 2.0).unwrap();
        let a = rich_best_action(0.5, 0.0, &spec).unwrap();
        assert!((a - 0.5).abs() < 1e-12);
        assert_eq!(rich_best_action(-0.3, 0.2, &spec).unwrap(), 0.0);
        let lo = rich_best_action(0.2, 0.3, &spec).unwrap();
        let hi = rich_best_action(0.6, 0.3, &spec).unwrap();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 0.9).abs() < 1e-12);
    }

    #[test]
    fn table_spec_validation() {
        let bad = RichActionSpec {
            actions: vec![0.0, 1.0, 2.0],
            payoff: RichPayoff::Table {
                lambdas: vec![0.0],
                intercept: vec![vec![0.0, 0.0, 0.0]],
                slope: vec![vec![0.0, 2.0, 1.0]],
            },
        };
        assert!(bad.validate().is_err());
        let good = RichActionSpec {
            actions: vec![0.0, 1.0],
            payoff: RichPayoff::Table {
                lambdas: vec![0.0],
                intercept: vec![vec![0.0, -0.1]],
                slope: vec![vec![0.0, 1.0]],
            },
        };
        good.validate().unwrap();
        assert_eq!(rich_best_action(0.05, 0.0, &good).unwrap(), 0.0);
        assert_eq!(rich_best_action(0.1, 0.0, &good).unwrap(), 1.0);
        assert!(rich_best_action(0.1, 0.5, &good).is_err());
    }

    #[test]
    fn misreport_towards_the_higher_action() {
        let spec = RichActionSpec::quadratic(0.1, 2.0).unwrap();
        let env = linear_environment(StateDistribution::uniform(-1.0, 1.0), TypePrior::degenerate(0.0));
        // s0 on [0.4, 0.6] has mean 0.5; s1 on [0, 0.4] has mean 0.2
        let g = GeneralTest::deterministic(vec![-1.0, 0.0, 0.4, 0.6, 1.0], 3, &[2, 1, 0, 2]).unwrap();
        let r = evaluate_rich(&g, &env, &spec).unwrap();
        assert!((r.signals[0].acceptance_prob - 0.5).abs() < 1e-12);
        assert!((r.signals[1].acceptance_prob - 0.2).abs() < 1e-12);
        assert!(!r.trustworthy);
        assert_eq!(r.best_deviation, Some((0, 1)));

        let one = GeneralTest::deterministic(vec![-1.0, 1.0], 1, &[0]).unwrap();
        assert!(evaluate_rich(&one, &env, &spec).unwrap().trustworthy);
    }

    #[test]
    fn rich_sufficiency_on_a_small_grid() {
        let spec = RichActionSpec::quadratic(0.01, 2.0).unwrap();
        let env = linear_environment(StateDistribution::uniform(-1.0, 1.0), TypePrior::degenerate(0.2));
        let r = verify_rich_binary_sufficiency(&env, &spec, &uniform_edges(&env, 8), 3, 50, 1).unwrap();
        assert!(r.exhaustive);
        assert!(r.holds(), "{r:?}");
        assert!(r.binary_payoff > 0.0);
    }
}
