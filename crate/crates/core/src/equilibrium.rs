//! Acceptance, trustworthiness and payoffs of tests under truthful reporting.

use serde::{Deserialize, Serialize};

use crate::measure::{integrate, integrate_interval};
use crate::model::{BinaryTest, Environment, GeneralTest, PiecewiseLinear, TypePrior};
use crate::{Error, Result};

/// Tolerance on integrals for acceptance and trustworthiness.
pub const INTEGRAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `∫_{Θ₁} u dG`.
    pub proposal_value: f64,
    /// `∫_{Θ₀} u dG`.
    pub null_value: f64,
    /// Index of the smallest accepting type.
    pub acceptance_cutoff: Option<usize>,
    pub cutoff_lambda: Option<f64>,
    pub acceptance_prob: f64,
    pub principal_payoff: f64,
    pub trustworthy: bool,
    pub proposal_mass: f64,
}

/// Acceptance and payoff from the integrals of one proposal set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Outcome {
    pub cutoff: Option<usize>,
    pub prob: f64,
    pub payoff: f64,
    pub trustworthy: bool,
}

/// Shared payoff rule: the smallest type with `∫_{Θ₁} v ≥ -tol` sets the
/// cutoff, every type from there up accepts, and the principal earns the
/// proposal value times the acceptance probability.
pub(crate) fn outcome(
    nonempty: bool,
    proposal_value: f64,
    null_value: f64,
    agent_values: impl IntoIterator<Item = f64>,
    types: &TypePrior,
) -> Outcome {
    if !nonempty {
        return Outcome {
            cutoff: None,
            prob: 0.0,
            payoff: 0.0,
            trustworthy: true,
        };
    }
    let cutoff = agent_values
        .into_iter()
        .position(|v| v >= -INTEGRAL_TOL);
    let prob = cutoff.map_or(0.0, |k| types.tail(k));
    let payoff = if proposal_value >= -INTEGRAL_TOL {
        proposal_value * prob
    } else {
        0.0
    };
    Outcome {
        cutoff,
        prob,
        payoff,
        trustworthy: null_value <= INTEGRAL_TOL && proposal_value >= -INTEGRAL_TOL,
    }
}

/// Smallest accepting type index, or `None` when nobody accepts.
pub fn acceptance_cutoff(test: &BinaryTest, env: &Environment) -> Result<Option<usize>> {
    if test.is_empty() {
        return Err(Error::NoProposal);
    }
    let vs = env.agent_payoffs()?;
    for (k, v) in vs.iter().enumerate() {
        if integrate(v, test, &env.states)? >= -INTEGRAL_TOL {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

pub fn evaluate(test: &BinaryTest, env: &Environment) -> Result<EvalReport> {
    let dist = &env.states;
    let (lo, hi) = env.support();
    let u = &env.payoffs.u;
    let proposal_value = integrate(u, test, dist)?;
    let null_value = integrate(u, &test.complement(), dist)?;
    let mut agent = Vec::with_capacity(env.types.len());
    for v in env.agent_payoffs()? {
        agent.push(integrate(&v, test, dist)?);
    }
    let o = outcome(
        !test.is_empty(),
        proposal_value,
        null_value,
        agent,
        &env.types,
    );
    let one = PiecewiseLinear::constant(lo, hi, 1.0);
    Ok(EvalReport {
        proposal_value,
        null_value,
        acceptance_cutoff: o.cutoff,
        cutoff_lambda: o.cutoff.map(|k| env.types.lambda(k)),
        acceptance_prob: o.prob,
        principal_payoff: o.payoff,
        trustworthy: o.trustworthy,
        proposal_mass: integrate(&one, test, dist)?,
    })
}

/// The proposal set `{θ : f(θ) ≥ 0}` (or `> 0` with `strict`).
pub(crate) fn sign_set(f: &PiecewiseLinear, lo: f64, hi: f64, strict: bool) -> Result<BinaryTest> {
    let mut pieces = Vec::new();
    let bp = f.breakpoints();
    for w in bp.windows(2) {
        let (x0, x1) = (w[0].max(lo), w[1].min(hi));
        if x1 <= x0 {
            continue;
        }
        let (a, b) = f.linear_on(x0, x1);
        let keep = |x: f64| {
            let y = a + b * x;
            if strict {
                y > 0.0
            } else {
                y >= 0.0
            }
        };
        if b == 0.0 {
            if keep(x0) {
                pieces.push((x0, x1));
            }
            continue;
        }
        let root = (-a / b).clamp(x0, x1);
        let mid_left = 0.5 * (x0 + root);
        let mid_right = 0.5 * (root + x1);
        if root > x0 && keep(mid_left) {
            pieces.push((x0, root));
        }
        if root < x1 && keep(mid_right) {
            pieces.push((root, x1));
        }
    }
    BinaryTest::new(pieces, lo, hi)
}

/// Evaluates `Θ₁ = {u ≥ 0}`, the test the principal would run with no need
/// to be trusted. The trustworthiness flag is reported but not enforced.
pub fn full_learning_benchmark(env: &Environment) -> Result<EvalReport> {
    let (lo, hi) = env.support();
    let set = sign_set(&env.payoffs.u, lo, hi, false)?;
    evaluate(&set, env)
}

/// Per-signal summary of a general test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalReport {
    pub label: String,
    pub prob: f64,
    /// `E[u | s]`, absent for zero-probability signals.
    pub mean_u: Option<f64>,
    pub proposes: bool,
    pub acceptance_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralEvalReport {
    pub trustworthy: bool,
    /// `(reported, observed)` signal indices of the most profitable misreport.
    pub best_deviation: Option<(usize, usize)>,
    pub truthful_payoff: f64,
    pub signals: Vec<SignalReport>,
}

/// Cell integrals of mass, `θ`, `u` and each `v_k` on a test grid.
#[derive(Clone, Debug)]
pub(crate) struct CellIntegrals {
    pub mass: Vec<f64>,
    pub theta: Vec<f64>,
    pub u: Vec<f64>,
    /// `v[k][i]`.
    pub v: Vec<Vec<f64>>,
}

impl CellIntegrals {
    pub fn new(env: &Environment, edges: &[f64]) -> Result<Self> {
        let (lo, hi) = env.support();
        let tol = 1e-12 * (hi - lo).max(1.0);
        if edges.len() < 2 || edges[0] < lo - tol || *edges.last().unwrap() > hi + tol {
            return Err(Error::SetEscapesSupport);
        }
        let dist = &env.states;
        let one = PiecewiseLinear::constant(lo, hi, 1.0);
        let id = PiecewiseLinear::identity(lo, hi);
        let per_cell = |f: &PiecewiseLinear| -> Vec<f64> {
            edges
                .windows(2)
                .map(|w| integrate_interval(f, w[0], w[1], dist))
                .collect()
        };
        Ok(Self {
            mass: per_cell(&one),
            theta: per_cell(&id),
            u: per_cell(&env.payoffs.u),
            v: env.agent_payoffs()?.iter().map(per_cell).collect(),
        })
    }

    pub fn cells(&self) -> usize {
        self.mass.len()
    }
}

/// Signal-level integrals of a kernel: `(P(s), ∫ u σ_s dG, ∫ θ σ_s dG, ∫ v_k σ_s dG)`.
pub(crate) struct SignalIntegrals {
    pub prob: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    /// `v[s][k]`.
    pub v: Vec<Vec<f64>>,
}

impl SignalIntegrals {
    pub fn new(cells: &CellIntegrals, kernel: &[Vec<f64>], signals: usize) -> Self {
        let types = cells.v.len();
        let mut out = Self {
            prob: vec![0.0; signals],
            u: vec![0.0; signals],
            theta: vec![0.0; signals],
            v: vec![vec![0.0; types]; signals],
        };
        for (i, row) in kernel.iter().enumerate() {
            for (s, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                out.prob[s] += w * cells.mass[i];
                out.u[s] += w * cells.u[i];
                out.theta[s] += w * cells.theta[i];
                for k in 0..types {
                    out.v[s][k] += w * cells.v[k][i];
                }
            }
        }
        out
    }
}

/// Misreport analysis given each signal's conditional principal value
/// `E[u | s]` and the engagement `A(s)` its report triggers when proposed.
///
/// The principal proposes after `s` iff `E[u | s] ≥ 0`. Reporting `s̃` after
/// observing `s` earns `E[u | s] · A(s̃)` when `s̃` is an on-path proposal
/// signal; proposals off path are rejected.
pub(crate) fn misreports(
    prob: &[f64],
    mean_u: &[f64],
    engagement: &[f64],
) -> (Option<(usize, usize)>, f64) {
    let n = prob.len();
    let proposes = |s: usize| prob[s] > 0.0 && mean_u[s] >= 0.0;
    let truthful = |s: usize| {
        if proposes(s) {
            mean_u[s] * engagement[s]
        } else {
            0.0
        }
    };
    let mut best: Option<(usize, usize)> = None;
    let mut best_gain = INTEGRAL_TOL;
    for s in (0..n).filter(|&s| prob[s] > 0.0) {
        for r in (0..n).filter(|&r| r != s && proposes(r)) {
            let gain = mean_u[s] * engagement[r] - truthful(s);
            if gain > best_gain {
                best_gain = gain;
                best = Some((r, s));
            }
        }
    }
    let payoff = (0..n).map(|s| prob[s] * truthful(s)).sum();
    (best, payoff)
}

pub(crate) fn evaluate_kernel(
    cells: &CellIntegrals,
    types: &TypePrior,
    kernel: &[Vec<f64>],
    labels: &[String],
) -> GeneralEvalReport {
    let sig = SignalIntegrals::new(cells, kernel, labels.len());
    let n = labels.len();
    let mean_u: Vec<f64> = (0..n)
        .map(|s| if sig.prob[s] > 0.0 { sig.u[s] / sig.prob[s] } else { 0.0 })
        .collect();
    let acceptance: Vec<f64> = (0..n)
        .map(|s| {
            sig.v[s]
                .iter()
                .position(|&v| v >= -INTEGRAL_TOL)
                .map_or(0.0, |k| types.tail(k))
        })
        .collect();
    let (best_deviation, truthful_payoff) = misreports(&sig.prob, &mean_u, &acceptance);
    let signals = (0..n)
        .map(|s| SignalReport {
            label: labels[s].clone(),
            prob: sig.prob[s],
            mean_u: (sig.prob[s] > 0.0).then_some(mean_u[s]),
            proposes: sig.prob[s] > 0.0 && mean_u[s] >= 0.0,
            acceptance_prob: acceptance[s],
        })
        .collect();
    GeneralEvalReport {
        trustworthy: best_deviation.is_none(),
        best_deviation,
        truthful_payoff,
        signals,
    }
}

/// Checks every pair of signals for a profitable misreport and returns the
/// payoff from truthful reporting.
pub fn evaluate_general(test: &GeneralTest, env: &Environment) -> Result<GeneralEvalReport> {
    let cells = CellIntegrals::new(env, &test.edges)?;
    Ok(evaluate_kernel(&cells, &env.types, &test.kernel, &test.signals))
}
