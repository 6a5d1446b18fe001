//! Screening menus for the linear specification `u = θ`, `v = λ - θ`.
//!
//! In the linear case a binary test matters only through its proposal
//! probability `p` and conditional mean `μ`. Writing `m = p μ`, the
//! principal's payoff and every incentive constraint are linear in
//! `(p_k, m_k)`, and the set of inducible pairs is `{m ≤ φ(p)}` with `φ` the
//! concave top-`p` moment. [`solve_menu_linear`] solves that program with
//! cutting planes on `φ` and realizes each pair as an interval test.

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use serde::{Deserialize, Serialize};

use crate::measure::{fit_interval, summarize, Cdf};
use crate::model::{Environment, MenuEntry, MenuSchedule, TypePrior, Violation};
use crate::solver_single::{solve_threshold, SolveReport};
use crate::{Error, Result};

/// Tolerance of [`check_menu_incentives`].
pub const MENU_TOL: f64 = 1e-9;
const CUT_TOL: f64 = 1e-12;
const CUT_CAP: usize = 500;
const STALL_TOL: f64 = 1e-9;
/// Row scale of the frontier cuts; the LP's absolute feasibility tolerance
/// would otherwise stall the cuts near `1e-10`.
const CUT_SCALE: f64 = 1e4;
/// Proposal probabilities below this count as not served.
const SERVE_TOL: f64 = 1e-12;

/// `(p_k, μ_k)` for every type from `served_from` up, with `μ` priced so the
/// lowest served type is held to zero surplus:
/// `μ_k = λ_k - (1/p_k) Σ_{served_from ≤ j < k} p_j (λ_{j+1} - λ_j)`.
pub fn envelope_schedule(
    p: &[f64],
    served_from: usize,
    types: &TypePrior,
) -> Result<Vec<Option<(f64, f64)>>> {
    if p.len() != types.len() || served_from >= types.len() {
        return Err(Error::Invalid("one proposal probability per type expected".into()));
    }
    let mut out = vec![None; types.len()];
    let mut rent = 0.0;
    for k in served_from..types.len() {
        if !(p[k] > 0.0) {
            return Err(Error::Invalid(format!("served type {k} has p = {}", p[k])));
        }
        if k > served_from {
            if p[k] < p[k - 1] {
                return Err(Error::Invalid("proposal probabilities must be nondecreasing".into()));
            }
            rent += p[k - 1] * (types.lambda(k) - types.lambda(k - 1));
        }
        out[k] = Some((p[k], types.lambda(k) - rent / p[k]));
    }
    Ok(out)
}

/// Every participation, truthfulness, feasibility and agent-incentive
/// failure of `menu`, plus any test that does not induce its `(p, μ)`.
pub fn check_menu_incentives(menu: &MenuSchedule, env: &Environment) -> Vec<Violation> {
    let mut out = Vec::new();
    let cdf = Cdf::new(&env.states);
    let mean = cdf.mean();
    let types = &env.types;
    for e in &menu.entries {
        let at = Some(e.lambda);
        if !(e.p > 0.0 && e.p <= cdf.total() + MENU_TOL) {
            out.push(Violation::new("proposal probability", format!("type {}: p = {}", e.type_index, e.p), at));
            continue;
        }
        if e.mu > e.lambda + MENU_TOL {
            out.push(Violation::new(
                "agent participation",
                format!("type {}: μ = {} exceeds λ = {}", e.type_index, e.mu, e.lambda),
                at,
            ));
        }
        let floor = (mean / e.p).max(0.0);
        if e.mu < floor - MENU_TOL {
            out.push(Violation::new(
                "principal truthfulness",
                format!("type {}: μ = {} below max(0, E[θ]/p) = {floor}", e.type_index, e.mu),
                at,
            ));
        }
        let m = e.p * e.mu;
        let top = cdf.frontier(e.p);
        let bottom = cdf.moment(cdf.quantile(e.p));
        if m > top + MENU_TOL || m < bottom - MENU_TOL {
            out.push(Violation::new(
                "feasibility",
                format!("type {}: (p, μ) = ({}, {}) is not inducible", e.type_index, e.p, e.mu),
                at,
            ));
        }
        match summarize(&e.test, &env.states) {
            Ok(s) if (s.p - e.p).abs() <= 1e-8 && s.mu.is_some_and(|x| (x - e.mu).abs() <= 1e-8) => {}
            Ok(s) => out.push(Violation::new(
                "realization",
                format!("type {}: test gives (p, μ) = ({}, {:?})", e.type_index, s.p, s.mu),
                at,
            )),
            Err(err) => out.push(Violation::new("realization", err.to_string(), at)),
        }
    }
    for k in 0..types.len() {
        let lam = types.lambda(k);
        let own = menu.entry_for(k).map_or(0.0, |e| (lam - e.mu) * e.p);
        for e in &menu.entries {
            let dev = (lam - e.mu) * e.p;
            if dev > own + MENU_TOL {
                out.push(Violation::new(
                    "agent incentive",
                    format!("type {k} gains {} by taking the test of type {}", dev - own, e.type_index),
                    Some(lam),
                ));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuReport {
    pub schedule: MenuSchedule,
    /// `Σ_k q_k p_k μ_k`.
    pub payoff: f64,
    pub lowest_served: Option<usize>,
    /// Frontier cuts used by the accepted configuration.
    pub cuts: usize,
    pub fsb_binds_at_top: bool,
}

/// Optimal pairs `(p_k, m_k)` when types `l..` are served, or `None` when
/// infeasible.
fn solve_from(cdf: &Cdf, types: &TypePrior, l: usize) -> Result<Option<(Vec<f64>, Vec<f64>, usize)>> {
    let n = types.len();
    let floor = cdf.mean().max(0.0);
    let mut cuts: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0 * cdf.total()).collect();
    let mut added = 0;
    loop {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<(Variable, Variable)> = (l..n)
            .map(|k| {
                let p = lp.add_var(0.0, (0.0, cdf.total()));
                let m = lp.add_var(types.prob(k), (floor, f64::INFINITY));
                (p, m)
            })
            .collect();
        for (i, &(p, m)) in vars.iter().enumerate() {
            let lam = types.lambda(l + i);
            lp.add_constraint([(m, 1.0), (p, -lam)], ComparisonOp::Le, 0.0);
            if l > 0 {
                // the highest unserved type must not want this test
                lp.add_constraint([(m, 1.0), (p, -types.lambda(l - 1))], ComparisonOp::Ge, 0.0);
            }
            for (j, &(pj, mj)) in vars.iter().enumerate() {
                if i != j {
                    lp.add_constraint(
                        [(p, lam), (m, -1.0), (pj, -lam), (mj, 1.0)],
                        ComparisonOp::Ge,
                        0.0,
                    );
                }
            }
            for &c in &cuts {
                let s = cdf.frontier_slope(c);
                lp.add_constraint(
                    [(m, CUT_SCALE), (p, -s * CUT_SCALE)],
                    ComparisonOp::Le,
                    (cdf.frontier(c) - s * c) * CUT_SCALE,
                );
            }
        }
        let sol = match lp.solve() {
            Ok(out) => match out.into_solution() {
                Ok(s) => s,
                Err(_) => return Err(Error::Lp("interrupted".into())),
            },
            Err(microlp::Error::Infeasible) => return Ok(None),
            Err(e) => return Err(Error::Lp(e.to_string())),
        };
        let p: Vec<f64> = vars.iter().map(|&(p, _)| sol.var_value(p)).collect();
        let m: Vec<f64> = vars.iter().map(|&(_, m)| sol.var_value(m)).collect();
        let mut fresh = Vec::new();
        let mut worst = 0.0f64;
        for (&pk, &mk) in p.iter().zip(&m) {
            let excess = mk - cdf.frontier(pk);
            worst = worst.max(excess);
            if excess > CUT_TOL && !cuts.iter().any(|&c| (c - pk).abs() <= 1e-15) {
                fresh.push(pk);
            }
        }
        // a repeated cut means the LP tolerance, not the cuts, is binding
        if fresh.is_empty() && worst > STALL_TOL {
            return Err(Error::NoConvergence {
                what: "frontier cutting planes",
                iterations: added,
            });
        }
        if fresh.is_empty() {
            return Ok(Some((p, m, added)));
        }
        added += fresh.len();
        if added > CUT_CAP {
            return Err(Error::NoConvergence {
                what: "frontier cutting planes",
                iterations: CUT_CAP,
            });
        }
        cuts.extend(fresh);
    }
}

/// Optimal screening menu for a finite type prior.
///
/// For each choice of lowest served type the menu problem is a linear
/// program in `(p_k, m_k = p_k μ_k)` with agent participation and
/// incentive constraints between every pair of types, the truthfulness floor
/// `m_k ≥ max(0, E[θ])`, and the inducibility frontier `m_k ≤ φ(p_k)` added
/// as tangent cuts until no pair violates it by more than `1e-12`. The best
/// configuration is compared against serving nobody.
pub fn solve_menu_linear(env: &Environment) -> Result<MenuReport> {
    if !env.is_linear_spec() {
        return Err(Error::NotLinear("solve_menu_linear"));
    }
    let types = &env.types;
    let n = types.len();
    let cdf = Cdf::new(&env.states);
    let empty = MenuReport {
        schedule: MenuSchedule::empty(n),
        payoff: 0.0,
        lowest_served: None,
        cuts: 0,
        fsb_binds_at_top: false,
    };
    if types.lambdas().all(|l| l < cdf.mean()) {
        return Ok(empty);
    }
    let mut best: Option<(f64, usize, Vec<f64>, Vec<f64>, usize)> = None;
    for l in 0..n {
        let Some((p, m, cuts)) = solve_from(&cdf, types, l)? else {
            continue;
        };
        let value: f64 = (l..n).zip(&m).map(|(k, &mk)| types.prob(k) * mk).sum();
        if best.as_ref().is_none_or(|b| value > b.0 + 1e-13) {
            best = Some((value, l, p, m, cuts));
        }
    }
    let Some((_, l, p, m, cuts)) = best else {
        return Ok(empty);
    };
    let mut entries = Vec::new();
    let mut unserved: Vec<usize> = (0..l).collect();
    for (i, k) in (l..n).enumerate() {
        let pk = p[i];
        if pk < SERVE_TOL {
            unserved.push(k);
            continue;
        }
        let mk = m[i].min(cdf.frontier(pk));
        let mu = mk / pk;
        let test = realize(pk, mu, env)?;
        entries.push(MenuEntry {
            type_index: k,
            lambda: types.lambda(k),
            p: pk,
            mu,
            test,
        });
    }
    if entries.is_empty() {
        return Ok(empty);
    }
    let payoff = entries.iter().map(|e| types.prob(e.type_index) * e.p * e.mu).sum();
    let top = entries.last().unwrap();
    let fsb_binds_at_top = (top.p * top.mu - cdf.frontier(top.p)).abs() <= MENU_TOL;
    Ok(MenuReport {
        lowest_served: Some(entries[0].type_index),
        schedule: MenuSchedule { entries, unserved },
        payoff,
        cuts,
        fsb_binds_at_top,
    })
}

/// Interval test for `(p, μ)`, nudging `p` onto the frontier when rounding
/// leaves it a hair outside.
fn realize(p: f64, mu: f64, env: &Environment) -> Result<crate::model::BinaryTest> {
    match fit_interval(p, mu, &env.states) {
        Err(Error::NotInducible { max_p, .. }) if p <= max_p + 1e-9 => {
            fit_interval(max_p, mu, &env.states)
        }
        r => r,
    }
}

/// Best single test in the linear specification, found among thresholds.
pub fn solve_single_linear(env: &Environment) -> Result<SolveReport> {
    if !env.is_linear_spec() {
        return Err(Error::NotLinear("solve_single_linear"));
    }
    solve_threshold(env)
}
