//! Optimal trustworthy binary tests.
//!
//! [`solve_general`] handles any environment: for each candidate cutoff type
//! it maximizes `∫ u ω dG` subject to that type accepting, whose optimum is
//! the bang-bang set `{u + η v > 0}` plus a slice of the tie region, and then
//! keeps the candidate only if the principal would report truthfully.
//! The structured solvers scan threshold, interval and tail sets on a grid.

use serde::{Deserialize, Serialize};

use crate::cells::{CellTable, Field, Lin};
use crate::equilibrium::{evaluate, outcome, EvalReport, INTEGRAL_TOL};
use crate::model::{Alignment, BinaryTest, Environment, FormTag, PiecewiseLinear};
use crate::{Error, Result};

const ETA_BISECTION_CAP: usize = 300;
const ETA_DOUBLING_CAP: usize = 200;
/// Relative tolerance for recognising `u + η v ≡ 0` on a cell.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCandidate {
    pub type_index: usize,
    pub lambda: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub best_test: BinaryTest,
    pub payoff: f64,
    pub lambda_star: Option<f64>,
    pub cutoff_index: Option<usize>,
    /// Multiplier on the acceptance constraint; general solver only.
    pub eta: Option<f64>,
    pub form: FormTag,
    pub candidates_examined: usize,
    pub skipped: Vec<SkippedCandidate>,
    pub grid_cells: usize,
    pub eval: EvalReport,
}

pub fn classify_form(test: &BinaryTest) -> FormTag {
    test.form()
}

/// Running maximum by payoff; ties go to the smaller proposal mass.
struct Best<T> {
    payoff: f64,
    mass: f64,
    item: Option<T>,
}

impl<T> Best<T> {
    fn new() -> Self {
        Self {
            payoff: 0.0,
            mass: 0.0,
            item: None,
        }
    }

    fn offer(&mut self, payoff: f64, mass: f64, item: T) {
        let better = payoff > self.payoff + 1e-14
            || ((payoff - self.payoff).abs() <= 1e-14 && mass < self.mass - 1e-14);
        if better {
            self.payoff = payoff;
            self.mass = mass;
            self.item = Some(item);
        }
    }
}

fn report(
    env: &Environment,
    test: BinaryTest,
    eta: Option<f64>,
    examined: usize,
    skipped: Vec<SkippedCandidate>,
    grid_cells: usize,
) -> Result<SolveReport> {
    let eval = evaluate(&test, env)?;
    Ok(SolveReport {
        payoff: eval.principal_payoff,
        lambda_star: eval.cutoff_lambda,
        cutoff_index: eval.acceptance_cutoff,
        eta,
        form: test.form(),
        best_test: test,
        candidates_examined: examined,
        skipped,
        grid_cells,
        eval,
    })
}

/// Points where `f` crosses zero inside a segment.
fn zeros(f: &PiecewiseLinear) -> Vec<f64> {
    let bp = f.breakpoints();
    (0..f.segment_count())
        .filter_map(|i| {
            let (l, r) = f.segment_values(i);
            (l * r < 0.0).then(|| bp[i] + (bp[i + 1] - bp[i]) * l / (l - r))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// general solver

/// Sub-interval of `[x0, x1]` where `c > 0`.
fn positive_part(c: Lin, x0: f64, x1: f64) -> Option<(f64, f64)> {
    let (c0, c1) = (c.at(x0), c.at(x1));
    if c0 <= 0.0 && c1 <= 0.0 {
        return None;
    }
    if c0 > 0.0 && c1 > 0.0 {
        return Some((x0, x1));
    }
    let r = (x0 + (x1 - x0) * c0 / (c0 - c1)).clamp(x0, x1);
    let piece = if c0 > 0.0 { (x0, r) } else { (r, x1) };
    (piece.1 > piece.0).then_some(piece)
}

/// A piece `[x0, x1]` of cell `cell`.
#[derive(Clone, Copy, Debug)]
struct Piece {
    cell: usize,
    x0: f64,
    x1: f64,
}

/// The bang-bang partition at one multiplier.
struct Partition {
    strict: Vec<Piece>,
    v_strict: f64,
    /// Tie pieces where `v > 0`, left to right.
    z_plus: Vec<Piece>,
    /// Tie pieces where `v < 0`, left to right.
    z_minus: Vec<Piece>,
    /// Tie cells where `v ≡ 0`.
    z_zero: Vec<Piece>,
    v_plus: f64,
    v_minus: f64,
}

impl Partition {
    fn upper(&self) -> f64 {
        self.v_strict + self.v_plus
    }

    fn lower(&self) -> f64 {
        self.v_strict + self.v_minus
    }
}

fn is_tie(t: &CellTable, k: usize, i: usize, eta: f64) -> bool {
    let (x0, x1) = (t.edges[i], t.edges[i + 1]);
    let (u, v) = (t.u[i], t.v[k][i]);
    [x0, x1].iter().all(|&x| {
        let scale = u.at(x).abs().max(eta * v.at(x).abs()).max(1e-300);
        (u.at(x) + eta * v.at(x)).abs() <= TIE_TOL * scale
    })
}

fn partition(t: &CellTable, k: usize, eta: f64) -> Partition {
    let mut p = Partition {
        strict: Vec::new(),
        v_strict: 0.0,
        z_plus: Vec::new(),
        z_minus: Vec::new(),
        z_zero: Vec::new(),
        v_plus: 0.0,
        v_minus: 0.0,
    };
    let vk = Field::V(k);
    for i in 0..t.n() {
        let (x0, x1) = (t.edges[i], t.edges[i + 1]);
        if is_tie(t, k, i, eta) {
            let v = t.v[k][i];
            let neg = Lin::new(-v.a, -v.b);
            let mut any = false;
            if let Some((a, b)) = positive_part(v, x0, x1) {
                p.v_plus += t.cell_part(vk, i, a, b);
                p.z_plus.push(Piece { cell: i, x0: a, x1: b });
                any = true;
            }
            if let Some((a, b)) = positive_part(neg, x0, x1) {
                p.v_minus += t.cell_part(vk, i, a, b);
                p.z_minus.push(Piece { cell: i, x0: a, x1: b });
                any = true;
            }
            if !any {
                p.z_zero.push(Piece { cell: i, x0, x1 });
            }
            continue;
        }
        let c = t.u[i].add_scaled(&t.v[k][i], eta);
        if let Some((a, b)) = positive_part(c, x0, x1) {
            p.v_strict += t.cell_part(vk, i, a, b);
            p.strict.push(Piece { cell: i, x0: a, x1: b });
        }
    }
    p
}

/// Multipliers at which `u + η v` vanishes on a whole cell.
fn critical_etas(t: &CellTable, k: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..t.n() {
        let (x0, x1) = (t.edges[i], t.edges[i + 1]);
        let (u, v) = (t.u[i], t.v[k][i]);
        let (v0, v1) = (v.at(x0), v.at(x1));
        let eta = if v0.abs() >= v1.abs() {
            -u.at(x0) / v0
        } else {
            -u.at(x1) / v1
        };
        if eta.is_finite() && eta > 0.0 && is_tie(t, k, i, eta) {
            out.push(eta);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    out
}

fn pieces_to_intervals(pieces: impl IntoIterator<Item = Piece>) -> Vec<(f64, f64)> {
    pieces.into_iter().map(|p| (p.x0, p.x1)).collect()
}

/// Adds tie pieces from the right until their `v`-mass reaches `need`.
fn slice_from_right(t: &CellTable, k: usize, pieces: &[Piece], need: f64) -> Vec<Piece> {
    let vk = Field::V(k);
    let mut out = Vec::new();
    let mut remaining = need;
    for piece in pieces.iter().rev() {
        if remaining == 0.0 {
            break;
        }
        let w = t.cell_part(vk, piece.cell, piece.x0, piece.x1);
        if w.abs() <= remaining.abs() {
            out.push(*piece);
            remaining -= w;
            continue;
        }
        // ∫_{x}^{x1} v = remaining  ⇔  ∫_{x0}^{x} v = w - remaining
        let x = t
            .roots_in_cell(vk, piece.cell, piece.x0, piece.x1, w - remaining)
            .into_iter()
            .next()
            .unwrap_or(piece.x0);
        out.push(Piece { x0: x, ..*piece });
        break;
    }
    out
}

/// Optimal proposal set for cutoff type `k`, or the reason none exists.
fn lagrangian_set(t: &CellTable, k: usize) -> std::result::Result<(Vec<(f64, f64)>, f64), String> {
    let at0 = partition(t, k, 0.0);
    if at0.upper() >= -INTEGRAL_TOL {
        let all_ties: Vec<Piece> = at0
            .strict
            .iter()
            .chain(&at0.z_plus)
            .chain(&at0.z_minus)
            .chain(&at0.z_zero)
            .copied()
            .collect();
        let set = if at0.lower() >= -INTEGRAL_TOL {
            all_ties
        } else {
            at0.strict.iter().chain(&at0.z_plus).copied().collect()
        };
        return Ok((pieces_to_intervals(set), 0.0));
    }

    let mut hi = 1.0;
    let mut bracketed = false;
    for _ in 0..ETA_DOUBLING_CAP {
        if partition(t, k, hi).upper() >= -INTEGRAL_TOL {
            bracketed = true;
            break;
        }
        hi *= 2.0;
    }
    if !bracketed {
        return Err("no multiplier makes the type accept".into());
    }

    let mut prev = 0.0;
    for eta in critical_etas(t, k).into_iter().filter(|&e| e <= hi) {
        let part = partition(t, k, eta);
        if part.lower() > INTEGRAL_TOL {
            return bisect_eta(t, k, prev, eta);
        }
        if part.upper() >= -INTEGRAL_TOL {
            let need = -part.v_strict;
            let extra = if need >= 0.0 {
                slice_from_right(t, k, &part.z_plus, need)
            } else {
                slice_from_right(t, k, &part.z_minus, need)
            };
            let set = part.strict.iter().copied().chain(extra);
            return Ok((pieces_to_intervals(set), eta));
        }
        prev = eta;
    }
    bisect_eta(t, k, prev, hi)
}

/// Bisection on an interval free of tie cells, where the constraint value is
/// continuous and nondecreasing in `η`.
fn bisect_eta(
    t: &CellTable,
    k: usize,
    mut lo: f64,
    mut hi: f64,
) -> std::result::Result<(Vec<(f64, f64)>, f64), String> {
    let mut best = None;
    for _ in 0..ETA_BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let part = partition(t, k, mid);
        if part.v_strict >= 0.0 {
            hi = mid;
            best = Some(part);
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let part = match best {
        Some(p) => p,
        None => partition(t, k, hi),
    };
    if part.v_strict < -INTEGRAL_TOL {
        return Err("multiplier bisection did not bracket a root".into());
    }
    Ok((pieces_to_intervals(part.strict), hi))
}

/// Best trustworthy binary test for any valid environment.
pub fn solve_general(env: &Environment) -> Result<SolveReport> {
    let (lo, hi) = env.support();
    let table = CellTable::new(env, &[], 0)?;
    let mut best: Best<(BinaryTest, f64)> = Best::new();
    let mut examined = 0;
    let mut skipped = Vec::new();
    for k in 0..table.types() {
        let lambda = env.types.lambda(k);
        match lagrangian_set(&table, k) {
            Ok((intervals, eta)) => {
                examined += 1;
                let test = BinaryTest::new(intervals, lo, hi)?;
                let eval = evaluate(&test, env)?;
                if eval.trustworthy {
                    best.offer(eval.principal_payoff, eval.proposal_mass, (test, eta));
                } else {
                    skipped.push(SkippedCandidate {
                        type_index: k,
                        lambda,
                        reason: "principal would not report truthfully".into(),
                    });
                }
            }
            Err(reason) => skipped.push(SkippedCandidate {
                type_index: k,
                lambda,
                reason,
            }),
        }
    }
    let (test, eta) = best
        .item
        .unwrap_or_else(|| (BinaryTest::empty(lo, hi), 0.0));
    report(env, test, Some(eta), examined + 1, skipped, table.n())
}

// ---------------------------------------------------------------------------
// structured solvers

/// Totals over the support used to turn window integrals into set integrals.
struct Totals {
    mass: f64,
    u: f64,
    v: Vec<f64>,
}

impl Totals {
    fn new(t: &CellTable) -> Self {
        Self {
            mass: t.total(Field::Mass),
            u: t.total(Field::U),
            v: (0..t.types()).map(|k| t.total(Field::V(k))).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    /// `[a, b]`.
    Interval,
    /// `[lo, a] ∪ [b, hi]`.
    Tail,
}

struct Scan<'a> {
    env: &'a Environment,
    table: CellTable,
    totals: Totals,
    shape: Shape,
    buf: Vec<f64>,
    examined: usize,
}

impl<'a> Scan<'a> {
    fn new(env: &'a Environment, shape: Shape) -> Result<Self> {
        let table = CellTable::new(env, &zeros(&env.payoffs.u), env.states.grid_n)?;
        let totals = Totals::new(&table);
        let k = table.types();
        Ok(Self {
            env,
            table,
            totals,
            shape,
            buf: vec![0.0; k],
            examined: 0,
        })
    }

    /// `(payoff, mass)` of a candidate from its window integrals in `self.buf`,
    /// or `None` when the principal would not report truthfully.
    fn judge(&mut self, nonempty: bool, w_mass: f64, w_u: f64) -> Option<(f64, f64)> {
        self.examined += 1;
        let (mass, pv) = match self.shape {
            Shape::Interval => (w_mass, w_u),
            Shape::Tail => {
                for (k, v) in self.buf.iter_mut().enumerate() {
                    *v = self.totals.v[k] - *v;
                }
                (self.totals.mass - w_mass, self.totals.u - w_u)
            }
        };
        let o = outcome(
            nonempty,
            pv,
            self.totals.u - pv,
            self.buf.iter().copied(),
            &self.env.types,
        );
        o.trustworthy.then_some((o.payoff, mass))
    }

    fn nonempty(&self, a: f64, b: f64) -> bool {
        match self.shape {
            Shape::Interval => b > a,
            Shape::Tail => a > self.table.lo() || b < self.table.hi(),
        }
    }

    fn judge_edges(&mut self, i: usize, j: usize) -> Option<(f64, f64)> {
        let t = &self.table;
        let w_mass = t.between_edges(Field::Mass, i, j);
        let w_u = t.between_edges(Field::U, i, j);
        for k in 0..t.types() {
            self.buf[k] = t.between_edges(Field::V(k), i, j);
        }
        let ne = self.nonempty(t.edges[i], t.edges[j]);
        self.judge(ne, w_mass, w_u)
    }

    fn judge_points(&mut self, a: f64, b: f64) -> Option<(f64, f64)> {
        let t = &self.table;
        let w_mass = t.integral(Field::Mass, a, b);
        let w_u = t.integral(Field::U, a, b);
        for k in 0..t.types() {
            self.buf[k] = t.integral(Field::V(k), a, b);
        }
        let ne = self.nonempty(a, b);
        self.judge(ne, w_mass, w_u)
    }

    /// Window integral of `v_k` that makes type `k` exactly indifferent.
    fn binding_target(&self, k: usize) -> f64 {
        match self.shape {
            Shape::Interval => 0.0,
            Shape::Tail => self.totals.v[k],
        }
    }

    fn may_cross(&self, k: usize, cell: usize, f0: f64, f1: f64) -> bool {
        if f0 * f1 <= 0.0 {
            return true;
        }
        let v = self.table.v[k][cell];
        let (x0, x1) = (self.table.edges[cell], self.table.edges[cell + 1]);
        v.at(x0) * v.at(x1) < 0.0
    }

    /// Right ends `b > edges[i]` with `∫_{edges[i]}^{b} v_k = target`.
    fn roots_right(&self, k: usize, i: usize, target: f64) -> Vec<f64> {
        let t = &self.table;
        let vk = Field::V(k);
        let mut out = Vec::new();
        let mut f0 = -target;
        for j in i..t.n() {
            let f1 = f0 + t.cell_total(vk, j);
            if self.may_cross(k, j, f0, f1) {
                out.extend(t.roots_in_cell(vk, j, t.edges[j], t.edges[j + 1], -f0));
            }
            f0 = f1;
        }
        out
    }

    /// Left ends `a < edges[j]` with `∫_{a}^{edges[j]} v_k = target`.
    fn roots_left(&self, k: usize, j: usize, target: f64) -> Vec<f64> {
        let t = &self.table;
        let vk = Field::V(k);
        let mut out = Vec::new();
        // g(x) = ∫_x^{edges[j]} v - target, walking left
        let mut g1 = -target;
        for i in (0..j).rev() {
            let g0 = g1 + t.cell_total(vk, i);
            if self.may_cross(k, i, g0, g1) {
                // ∫_{e_i}^{a} v = g0
                out.extend(t.roots_in_cell(vk, i, t.edges[i], t.edges[i + 1], g0));
            }
            g1 = g0;
        }
        out
    }

    /// Best `(a, b)` over grid pairs and over pairs with one grid end and one
    /// end where some type is exactly indifferent.
    fn run(&mut self) -> Best<(f64, f64, Option<(usize, bool)>)> {
        let mut best = Best::new();
        let n = self.table.n();
        for i in 0..=n {
            for j in i..=n {
                if let Some((pay, mass)) = self.judge_edges(i, j) {
                    let e = &self.table.edges;
                    best.offer(pay, mass, (e[i], e[j], None));
                }
            }
        }
        for k in 0..self.table.types() {
            let target = self.binding_target(k);
            for i in 0..=n {
                let a = self.table.edges[i];
                for b in self.roots_right(k, i, target) {
                    if let Some((pay, mass)) = self.judge_points(a, b) {
                        best.offer(pay, mass, (a, b, Some((k, true))));
                    }
                }
                let b = self.table.edges[i];
                for a in self.roots_left(k, i, target) {
                    if let Some((pay, mass)) = self.judge_points(a, b) {
                        best.offer(pay, mass, (a, b, Some((k, false))));
                    }
                }
            }
        }
        best
    }

    /// Root of `∫_a^b v_k = target` in `b` near `b0` (or in `a` near `a0`).
    fn follow(&self, k: usize, fixed: f64, guess: f64, move_right: bool) -> Option<f64> {
        let t = &self.table;
        let h = 2.0 * (t.hi() - t.lo()) / self.table.n().max(1) as f64;
        let target = self.binding_target(k);
        let g = |x: f64| {
            let (a, b) = if move_right { (fixed, x) } else { (x, fixed) };
            t.integral(Field::V(k), a, b) - target
        };
        let (mut l, mut r) = if move_right {
            ((guess - h).max(fixed), (guess + h).min(t.hi()))
        } else {
            ((guess - h).max(t.lo()), (guess + h).min(fixed))
        };
        let (gl, gr) = (g(l), g(r));
        if gl * gr > 0.0 {
            return None;
        }
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            if (g(m) <= 0.0) == (gl <= 0.0) {
                l = m;
            } else {
                r = m;
            }
        }
        Some(0.5 * (l + r))
    }

    /// Golden-section search along the curve where type `k` stays indifferent.
    fn refine(&mut self, a0: f64, b0: f64, k: usize, grid_left: bool) -> Option<(f64, f64, f64, f64)> {
        let h = (self.table.hi() - self.table.lo()) / self.table.n().max(1) as f64;
        let (lo, hi) = (self.table.lo(), self.table.hi());
        let center = if grid_left { a0 } else { b0 };
        let eval = |s: &mut Self, x: f64| -> Option<(f64, f64, f64, f64)> {
            let x = x.clamp(lo, hi);
            let (a, b) = if grid_left {
                (x, s.follow(k, x, b0, true)?)
            } else {
                (s.follow(k, x, a0, false)?, x)
            };
            let (pay, mass) = s.judge_points(a, b)?;
            Some((pay, mass, a, b))
        };
        let score = |r: &Option<(f64, f64, f64, f64)>| r.map_or(f64::NEG_INFINITY, |r| r.0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut l, mut r) = (center - h, center + h);
        let mut x1 = r - phi * (r - l);
        let mut x2 = l + phi * (r - l);
        let mut f1 = eval(self, x1);
        let mut f2 = eval(self, x2);
        for _ in 0..80 {
            if score(&f1) >= score(&f2) {
                r = x2;
                x2 = x1;
                f2 = f1;
                x1 = r - phi * (r - l);
                f1 = eval(self, x1);
            } else {
                l = x1;
                x1 = x2;
                f1 = f2;
                x2 = l + phi * (r - l);
                f2 = eval(self, x2);
            }
        }
        if score(&f1) >= score(&f2) {
            f1
        } else {
            f2
        }
    }

    fn solve(mut self, solver: &'static str) -> Result<SolveReport> {
        let best = self.run();
        let (lo, hi) = (self.table.lo(), self.table.hi());
        let mut chosen = best.item.map(|(a, b, tag)| (a, b, tag, best.payoff));
        if let Some((a, b, Some((k, grid_left)), pay)) = chosen {
            if let Some((p2, _, a2, b2)) = self.refine(a, b, k, grid_left) {
                if p2 > pay {
                    chosen = Some((a2, b2, Some((k, grid_left)), p2));
                }
            }
        }
        let test = match (chosen, self.shape) {
            (None, _) => BinaryTest::empty(lo, hi),
            (Some((a, b, ..)), Shape::Interval) => BinaryTest::interval(a, b, lo, hi)?,
            (Some((a, b, ..)), Shape::Tail) => BinaryTest::tail(a, b, lo, hi)?,
        };
        let step = (hi - lo) / self.table.n() as f64;
        if self.shape == Shape::Interval && self.env.u_is_identity() && !test.is_empty() {
            let (a, b) = test.intervals()[0];
            if a > step || b < -step {
                return Err(Error::ShapeViolation {
                    form: solver,
                    a,
                    b,
                });
            }
        }
        let n = self.table.n();
        report(self.env, test, None, self.examined, Vec::new(), n)
    }
}

fn require_alignment(env: &Environment, want: Alignment, solver: &'static str) -> Result<()> {
    if env.payoffs.alignment != want {
        return Err(Error::AlignmentMismatch {
            solver,
            expected: match want {
                Alignment::Positive => "positive",
                Alignment::NegativeConcave => "negative-concave",
                Alignment::NegativeConvex => "negative-convex",
                Alignment::General => "general",
            },
            found: env.payoffs.alignment.to_string(),
        });
    }
    Ok(())
}

/// Best trustworthy interval test `[θ*, θ**]`.
pub fn solve_interval(env: &Environment) -> Result<SolveReport> {
    require_alignment(env, Alignment::NegativeConcave, "interval solver")?;
    Scan::new(env, Shape::Interval)?.solve("interval")
}

/// Best trustworthy tail test `[lo, θ**] ∪ [θ*, hi]`.
pub fn solve_tail(env: &Environment) -> Result<SolveReport> {
    require_alignment(env, Alignment::NegativeConvex, "tail solver")?;
    Scan::new(env, Shape::Tail)?.solve("tail")
}

/// Best trustworthy threshold test `[θ̂, hi]`.
///
/// Candidates are every grid point, every zero of `u`, and every threshold at
/// which some type is exactly indifferent.
pub fn solve_threshold(env: &Environment) -> Result<SolveReport> {
    let (lo, hi) = env.support();
    let t = CellTable::new(env, &zeros(&env.payoffs.u), env.states.grid_n)?;
    let totals = Totals::new(&t);
    let n = t.n();
    let mut cands: Vec<f64> = t.edges.clone();
    for k in 0..t.types() {
        let vk = Field::V(k);
        for i in 0..n {
            let tail_i = t.between_edges(vk, i, n);
            let tail_next = t.between_edges(vk, i + 1, n);
            let (x0, x1) = (t.edges[i], t.edges[i + 1]);
            let v = t.v[k][i];
            if tail_i * tail_next <= 0.0 || v.at(x0) * v.at(x1) < 0.0 {
                cands.extend(t.roots_in_cell(vk, i, x0, x1, tail_i));
            }
        }
    }
    let mut best: Best<f64> = Best::new();
    let mut buf = vec![0.0; t.types()];
    for &c in &cands {
        let pv = t.integral(Field::U, c, hi);
        for (k, b) in buf.iter_mut().enumerate() {
            *b = t.integral(Field::V(k), c, hi);
        }
        let o = outcome(c < hi, pv, totals.u - pv, buf.iter().copied(), &env.types);
        if o.trustworthy {
            best.offer(o.payoff, t.integral(Field::Mass, c, hi), c);
        }
    }
    let test = match best.item {
        Some(c) => BinaryTest::threshold(c, lo, hi)?,
        None => BinaryTest::empty(lo, hi),
    };
    if env.payoffs.alignment == Alignment::Positive && env.u_is_identity() {
        if let Some(&(a, _)) = test.intervals().first() {
            let step = (hi - lo) / n as f64;
            if a < -step {
                return Err(Error::ShapeViolation {
                    form: "threshold",
                    a,
                    b: hi,
                });
            }
        }
    }
    report(env, test, None, cands.len() + 1, Vec::new(), n)
}
