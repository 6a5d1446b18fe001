//! Environments, tests and menus.
//!
//! Every payoff and density is piecewise linear (densities piecewise
//! constant), so integrals over unions of intervals are exact in closed form.
//! Construction only checks structure (lengths, ordering, finiteness); the
//! economic assumptions are checked by [`validate_environment`], which reports
//! violations as data.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance used when merging breakpoints and interval endpoints.
pub(crate) const EDGE_TOL: f64 = 1e-13;

/// Tolerance for the assumption checks in [`validate_environment`].
const VALIDATION_TOL: f64 = 1e-12;

/// A piecewise-linear function on a closed interval, possibly discontinuous at
/// its breakpoints.
///
/// Segment `i` spans `[breaks[i], breaks[i + 1]]` and moves linearly from
/// `left[i]` to `right[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseRepr", into = "PiecewiseRepr")]
pub struct PiecewiseLinear {
    breaks: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

/// Accepted JSON spellings of a piecewise-linear function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PiecewiseRepr {
    Segments {
        breaks: Vec<f64>,
        left: Vec<f64>,
        right: Vec<f64>,
    },
    Steps {
        breaks: Vec<f64>,
        levels: Vec<f64>,
    },
    Knots {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TryFrom<PiecewiseRepr> for PiecewiseLinear {
    type Error = Error;

    fn try_from(repr: PiecewiseRepr) -> Result<Self> {
        match repr {
            PiecewiseRepr::Segments {
                breaks,
                left,
                right,
            } => PiecewiseLinear::from_segments(breaks, left, right),
            PiecewiseRepr::Steps { breaks, levels } => PiecewiseLinear::steps(breaks, levels),
            PiecewiseRepr::Knots { knots, values } => PiecewiseLinear::from_knots(knots, values),
        }
    }
}

impl From<PiecewiseLinear> for PiecewiseRepr {
    fn from(f: PiecewiseLinear) -> Self {
        PiecewiseRepr::Segments {
            breaks: f.breaks,
            left: f.left,
            right: f.right,
        }
    }
}

impl PiecewiseLinear {
    pub fn from_segments(breaks: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::Invalid("piecewise function needs at least two breakpoints".into()));
        }
        if left.len() + 1 != breaks.len() || right.len() + 1 != breaks.len() {
            return Err(Error::Invalid(format!(
                "{} breakpoints need {} segment values, got {} left / {} right",
                breaks.len(),
                breaks.len() - 1,
                left.len(),
                right.len()
            )));
        }
        if breaks.iter().chain(&left).chain(&right).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("piecewise function has non-finite entries".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
        Ok(Self {
            breaks,
            left,
            right,
        })
    }

    /// Continuous interpolation through `(knots[i], values[i])`.
    pub fn from_knots(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Invalid("knots and values differ in length".into()));
        }
        if values.len() < 2 {
            return Err(Error::Invalid("piecewise function needs at least two knots".into()));
        }
        let left = values[..values.len() - 1].to_vec();
        let right = values[1..].to_vec();
        Self::from_segments(knots, left, right)
    }

    /// Step function with `levels[i]` on `[breaks[i], breaks[i + 1])`.
    pub fn steps(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        Self::from_segments(breaks, levels.clone(), levels)
    }

    pub fn constant(lo: f64, hi: f64, c: f64) -> Self {
        Self::affine(lo, hi, c, 0.0)
    }

    /// `intercept + slope * x` on `[lo, hi]`.
    pub fn affine(lo: f64, hi: f64, intercept: f64, slope: f64) -> Self {
        Self {
            breaks: vec![lo, hi],
            left: vec![intercept + slope * lo],
            right: vec![intercept + slope * hi],
        }
    }

    pub fn identity(lo: f64, hi: f64) -> Self {
        Self::affine(lo, hi, 0.0, 1.0)
    }

    /// Piecewise-linear interpolant of `f` on `n` equal segments.
    pub fn interpolate(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = n.max(1);
        let knots: Vec<f64> = (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect();
        let values = knots.iter().map(|&x| f(x)).collect();
        Self::from_knots(knots, values).expect("interpolation grid is well formed")
    }

    pub fn lo(&self) -> f64 {
        self.breaks[0]
    }

    pub fn hi(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn segment_count(&self) -> usize {
        self.left.len()
    }

    /// One-sided values `(left, right)` of segment `i`.
    pub fn segment_values(&self, i: usize) -> (f64, f64) {
        (self.left[i], self.right[i])
    }

    fn segment_of(&self, x: f64) -> usize {
        let idx = self.breaks.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.segment_count() - 1)
    }

    /// Right-continuous evaluation; the last segment is closed on the right.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment_of(x);
        let (x0, x1) = (self.breaks[i], self.breaks[i + 1]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        self.left[i] + t * (self.right[i] - self.left[i])
    }

    /// Coefficients `(a, b)` with `f(x) = a + b x` on the segment containing
    /// the midpoint of `[x0, x1]`.
    pub fn linear_on(&self, x0: f64, x1: f64) -> (f64, f64) {
        let i = self.segment_of(0.5 * (x0 + x1));
        let (s0, s1) = (self.breaks[i], self.breaks[i + 1]);
        let b = (self.right[i] - self.left[i]) / (s1 - s0);
        (self.left[i] - b * s0, b)
    }

    pub fn inf(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sup(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self + scale * other` on the common domain.
    pub fn add_scaled(&self, other: &PiecewiseLinear, scale: f64) -> PiecewiseLinear {
        let lo = self.lo().max(other.lo());
        let hi = self.hi().min(other.hi());
        let edges = merge_edges(
            self.breaks
                .iter()
                .chain(&other.breaks)
                .copied()
                .filter(|&x| x >= lo && x <= hi),
            hi - lo,
        );
        let mut left = Vec::with_capacity(edges.len() - 1);
        let mut right = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let (a1, b1) = self.linear_on(w[0], w[1]);
            let (a2, b2) = other.linear_on(w[0], w[1]);
            let (a, b) = (a1 + scale * a2, b1 + scale * b2);
            left.push(a + b * w[0]);
            right.push(a + b * w[1]);
        }
        PiecewiseLinear {
            breaks: edges,
            left,
            right,
        }
    }

    /// Largest decrease across the whole domain, including jumps; zero when
    /// the function is nondecreasing.
    fn worst_decrease(&self) -> (f64, f64) {
        let mut worst = (0.0, self.lo());
        for i in 0..self.segment_count() {
            let d = self.left[i] - self.right[i];
            if d > worst.0 {
                worst = (d, self.breaks[i]);
            }
            if i + 1 < self.segment_count() {
                let j = self.right[i] - self.left[i + 1];
                if j > worst.0 {
                    worst = (j, self.breaks[i + 1]);
                }
            }
        }
        worst
    }

    fn negated(&self) -> PiecewiseLinear {
        PiecewiseLinear {
            breaks: self.breaks.clone(),
            left: self.left.iter().map(|x| -x).collect(),
            right: self.right.iter().map(|x| -x).collect(),
        }
    }

    /// Witness of a failure of concavity: a jump or an increasing slope.
    fn concavity_witness(&self, tol: f64) -> Option<f64> {
        let n = self.segment_count();
        for i in 0..n.saturating_sub(1) {
            if (self.right[i] - self.left[i + 1]).abs() > tol {
                return Some(self.breaks[i + 1]);
            }
            let s0 = (self.right[i] - self.left[i]) / (self.breaks[i + 1] - self.breaks[i]);
            let s1 =
                (self.right[i + 1] - self.left[i + 1]) / (self.breaks[i + 2] - self.breaks[i + 1]);
            if s1 > s0 + tol {
                return Some(self.breaks[i + 1]);
            }
        }
        None
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.worst_decrease().0 <= tol
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        self.concavity_witness(tol).is_none()
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.negated().concavity_witness(tol).is_none()
    }

    /// True when `f(x) = intercept + slope * x` at every one-sided breakpoint value.
    pub fn equals_affine(&self, intercept: f64, slope: f64, tol: f64) -> bool {
        (0..self.segment_count()).all(|i| {
            (self.left[i] - intercept - slope * self.breaks[i]).abs() <= tol
                && (self.right[i] - intercept - slope * self.breaks[i + 1]).abs() <= tol
        })
    }
}

/// Sorts and dedups breakpoints, merging points closer than a relative tolerance.
pub(crate) fn merge_edges(points: impl IntoIterator<Item = f64>, width: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = points.into_iter().filter(|x| x.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    let tol = EDGE_TOL * width.abs().max(1.0);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for x in pts {
        match out.last() {
            Some(&last) if x - last <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

/// Distribution of the state: a piecewise-constant density on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    pub support_lo: f64,
    pub support_hi: f64,
    pub density: PiecewiseLinear,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
}

fn default_grid_n() -> usize {
    2000
}

impl StateDistribution {
    pub fn new(density: PiecewiseLinear) -> Self {
        Self {
            support_lo: density.lo(),
            support_hi: density.hi(),
            density,
            grid_n: default_grid_n(),
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::new(PiecewiseLinear::constant(lo, hi, 1.0 / (hi - lo)))
    }

    /// Density proportional to `weights` on `breaks`, normalized to one.
    pub fn from_weights(breaks: Vec<f64>, weights: &[f64]) -> Result<Self> {
        if weights.len() + 1 != breaks.len() {
            return Err(Error::Invalid("one weight per density cell expected".into()));
        }
        let total: f64 = weights
            .iter()
            .zip(breaks.windows(2))
            .map(|(w, b)| w * (b[1] - b[0]))
            .sum();
        if !(total > 0.0) {
            return Err(Error::Invalid("density weights have no mass".into()));
        }
        let levels = weights.iter().map(|w| w / total).collect();
        Ok(Self::new(PiecewiseLinear::steps(breaks, levels)?))
    }

    pub fn with_grid(mut self, grid_n: usize) -> Self {
        self.grid_n = grid_n;
        self
    }

    pub fn width(&self) -> f64 {
        self.support_hi - self.support_lo
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.density.segment_count())
            .map(|i| {
                let (l, r) = self.density.segment_values(i);
                let b = self.density.breakpoints();
                0.5 * (l + r) * (b[i + 1] - b[i])
            })
            .sum()
    }
}

/// Preference-alignment tag declared by the user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    Positive,
    NegativeConcave,
    NegativeConvex,
    General,
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Alignment::Positive => "positive",
            Alignment::NegativeConcave => "negative-concave",
            Alignment::NegativeConvex => "negative-convex",
            Alignment::General => "general",
        };
        f.write_str(s)
    }
}

/// The agent's payoff family `v(θ, λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentPayoff {
    /// `v(θ, λ) = base(θ) + λ · slope(θ)`; evaluable at any λ.
    Affine {
        base: PiecewiseLinear,
        slope: PiecewiseLinear,
    },
    /// One function per atom of the type prior, in ascending-λ order.
    PerType { funcs: Vec<PiecewiseLinear> },
}

impl AgentPayoff {
    /// `v(θ, λ) = λ - θ` on `[lo, hi]`.
    pub fn linear(lo: f64, hi: f64) -> Self {
        AgentPayoff::Affine {
            base: PiecewiseLinear::affine(lo, hi, 0.0, -1.0),
            slope: PiecewiseLinear::constant(lo, hi, 1.0),
        }
    }

    /// `v(θ, λ) = λ + base(θ)`.
    pub fn shifted(base: PiecewiseLinear) -> Self {
        let slope = PiecewiseLinear::constant(base.lo(), base.hi(), 1.0);
        AgentPayoff::Affine { base, slope }
    }

    /// The payoff function of type atom `k` with value `lambda`.
    pub fn for_type(&self, k: usize, lambda: f64) -> Result<PiecewiseLinear> {
        match self {
            AgentPayoff::Affine { base, slope } => Ok(base.add_scaled(slope, lambda)),
            AgentPayoff::PerType { funcs } => funcs.get(k).cloned().ok_or_else(|| {
                Error::Invalid(format!("no agent payoff given for type index {k}"))
            }),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, AgentPayoff::Affine { .. })
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            AgentPayoff::Affine { base, slope } => base
                .breakpoints()
                .iter()
                .chain(slope.breakpoints())
                .copied()
                .collect(),
            AgentPayoff::PerType { funcs } => funcs
                .iter()
                .flat_map(|f| f.breakpoints().iter().copied())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub u: PiecewiseLinear,
    pub v: AgentPayoff,
    pub alignment: Alignment,
}

/// A finite prior over agent types, sorted by λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypePrior {
    /// `(λ_k, q_k)` pairs.
    pub atoms: Vec<(f64, f64)>,
}

impl TypePrior {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid("type prior has no atoms".into()));
        }
        if atoms.iter().any(|(l, q)| !l.is_finite() || !q.is_finite()) {
            return Err(Error::Invalid("type prior has non-finite entries".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { atoms })
    }

    /// A publicly known type.
    pub fn degenerate(lambda: f64) -> Self {
        Self {
            atoms: vec![(lambda, 1.0)],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.atoms[k].0
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.atoms[k].1
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    /// `Pr[λ ≥ λ_k]`.
    pub fn tail(&self, k: usize) -> f64 {
        self.atoms[k..].iter().map(|a| a.1).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub states: StateDistribution,
    pub payoffs: PayoffSpec,
    pub types: TypePrior,
}

impl Environment {
    pub fn support(&self) -> (f64, f64) {
        (self.states.support_lo, self.states.support_hi)
    }

    pub fn with_types(&self, types: TypePrior) -> Environment {
        Environment {
            types,
            ..self.clone()
        }
    }

    /// Agent payoff of every type atom, in prior order.
    pub fn agent_payoffs(&self) -> Result<Vec<PiecewiseLinear>> {
        self.types
            .atoms
            .iter()
            .enumerate()
            .map(|(k, &(lam, _))| self.payoffs.v.for_type(k, lam))
            .collect()
    }

    /// Union of the breakpoints of the density and all payoffs, clipped to the support.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        let pts = self
            .states
            .density
            .breakpoints()
            .iter()
            .chain(self.payoffs.u.breakpoints())
            .copied()
            .chain(self.payoffs.v.breakpoints())
            .chain([lo, hi])
            .filter(|&x| x >= lo && x <= hi);
        merge_edges(pts, hi - lo)
    }

    /// True for `u(θ) = θ`, the normalization used by the structured solvers.
    pub fn u_is_identity(&self) -> bool {
        self.payoffs.u.equals_affine(0.0, 1.0, 1e-12)
    }

    /// True for the linear specification `u(θ) = θ`, `v(θ, λ) = λ - θ`.
    pub fn is_linear_spec(&self) -> bool {
        if !self.u_is_identity() {
            return false;
        }
        match &self.payoffs.v {
            AgentPayoff::Affine { base, slope } => {
                base.equals_affine(0.0, -1.0, 1e-12) && slope.equals_affine(1.0, 0.0, 1e-12)
            }
            AgentPayoff::PerType { funcs } => funcs
                .iter()
                .zip(self.types.lambdas())
                .all(|(f, lam)| f.equals_affine(lam, -1.0, 1e-12)),
        }
    }
}

/// Shape of a proposal set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormTag {
    Empty,
    Threshold,
    Interval,
    Tail,
    General,
}

impl fmt::Display for FormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormTag::Empty => "empty",
            FormTag::Threshold => "threshold",
            FormTag::Interval => "interval",
            FormTag::Tail => "tail",
            FormTag::General => "general",
        };
        f.write_str(s)
    }
}

/// A deterministic binary test, given by its proposal states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryTest {
    intervals: Vec<(f64, f64)>,
    support: (f64, f64),
    form: FormTag,
}

impl BinaryTest {
    /// Builds a test from arbitrary closed intervals inside `[lo, hi]`.
    ///
    /// Overlapping or touching intervals are merged; zero-length pieces are
    /// dropped.
    pub fn new(intervals: Vec<(f64, f64)>, lo: f64, hi: f64) -> Result<Self> {
        let tol = EDGE_TOL * (hi - lo).abs().max(1.0);
        let mut pieces = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            if !(a.is_finite() && b.is_finite()) || b < a {
                return Err(Error::Invalid(format!("malformed interval [{a}, {b}]")));
            }
            if a < lo - tol || b > hi + tol {
                return Err(Error::SetEscapesSupport);
            }
            let (a, b) = (a.max(lo), b.min(hi));
            if b - a > tol {
                pieces.push((a, b));
            }
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match merged.last_mut() {
                Some(last) if a <= last.1 + tol => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let form = classify(&merged, lo, hi, tol);
        Ok(Self {
            intervals: merged,
            support: (lo, hi),
            form,
        })
    }

    pub fn empty(lo: f64, hi: f64) -> Self {
        Self {
            intervals: Vec::new(),
            support: (lo, hi),
            form: FormTag::Empty,
        }
    }

    pub fn threshold(t: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(t, hi)], lo, hi)
    }

    pub fn interval(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(a, b)], lo, hi)
    }

    /// `[lo, c] ∪ [d, hi]`.
    pub fn tail(c: f64, d: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, c), (d, hi)], lo, hi)
    }

    /// Proposal set made of the grid cells flagged in `indicator`.
    pub fn from_indicator(edges: &[f64], indicator: &[bool]) -> Result<Self> {
        if edges.len() != indicator.len() + 1 {
            return Err(Error::Invalid("indicator length must match cell count".into()));
        }
        let intervals = indicator
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| (edges[i], edges[i + 1]))
            .collect();
        Self::new(intervals, edges[0], *edges.last().unwrap())
    }

    /// Cell indicator on `edges`: a cell is in the set when its midpoint is.
    pub fn indicator(&self, edges: &[f64]) -> Vec<bool> {
        edges
            .windows(2)
            .map(|w| self.contains(0.5 * (w[0] + w[1])))
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn form(&self) -> FormTag {
        self.form
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue length of the proposal set.
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// The null states `Θ₀`, as a test of its own.
    pub fn complement(&self) -> BinaryTest {
        let (lo, hi) = self.support;
        let mut gaps = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = lo;
        for &(a, b) in &self.intervals {
            if a > cursor {
                gaps.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < hi {
            gaps.push((cursor, hi));
        }
        BinaryTest::new(gaps, lo, hi).expect("complement stays inside the support")
    }
}

impl fmt::Display for BinaryTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|(a, b)| format!("[{a:.6}, {b:.6}]"))
            .collect();
        write!(f, "{} ({})", parts.join(" ∪ "), self.form)
    }
}

fn classify(intervals: &[(f64, f64)], lo: f64, hi: f64, tol: f64) -> FormTag {
    match intervals {
        [] => FormTag::Empty,
        [(_, b)] if (hi - b).abs() <= tol => FormTag::Threshold,
        [_] => FormTag::Interval,
        [(a, _), (_, b)] if (a - lo).abs() <= tol && (hi - b).abs() <= tol => FormTag::Tail,
        _ => FormTag::General,
    }
}

/// A finite-signal test given cell by cell: row `i` is the signal
/// distribution on `[edges[i], edges[i + 1]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralTest {
    pub edges: Vec<f64>,
    pub signals: Vec<String>,
    pub kernel: Vec<Vec<f64>>,
}

impl GeneralTest {
    pub fn new(edges: Vec<f64>, signals: Vec<String>, kernel: Vec<Vec<f64>>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("test cells must be strictly increasing".into()));
        }
        if kernel.len() + 1 != edges.len() {
            return Err(Error::Invalid("one kernel row per cell expected".into()));
        }
        for (i, row) in kernel.iter().enumerate() {
            if row.len() != signals.len() {
                return Err(Error::Invalid(format!("kernel row {i} has wrong width")));
            }
            if row.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::Invalid(format!("kernel row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Invalid(format!("kernel row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self {
            edges,
            signals,
            kernel,
        })
    }

    /// Deterministic kernel: cell `i` emits signal `assignment[i]`.
    pub fn deterministic(edges: Vec<f64>, k: usize, assignment: &[usize]) -> Result<Self> {
        let kernel = assignment
            .iter()
            .map(|&s| {
                let mut row = vec![0.0; k];
                row[s] = 1.0;
                row
            })
            .collect();
        Self::new(edges, (0..k).map(|s| format!("s{s}")).collect(), kernel)
    }

    /// A binary test as a two-signal kernel (`proposal`, `null`); cells
    /// partially covered by the set get a fractional row.
    pub fn from_binary(test: &BinaryTest, edges: Vec<f64>) -> Result<Self> {
        let kernel = edges
            .windows(2)
            .map(|w| {
                let covered: f64 = test
                    .intervals()
                    .iter()
                    .map(|&(a, b)| (b.min(w[1]) - a.max(w[0])).max(0.0))
                    .sum();
                let f = (covered / (w[1] - w[0])).clamp(0.0, 1.0);
                vec![f, 1.0 - f]
            })
            .collect();
        Self::new(edges, vec!["proposal".into(), "null".into()], kernel)
    }

    pub fn signal_count(&self) -> usize {
        self.signals.len()
    }
}

/// One served type's entry in a screening menu.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuEntry {
    pub type_index: usize,
    pub lambda: f64,
    pub p: f64,
    pub mu: f64,
    pub test: BinaryTest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuSchedule {
    pub entries: Vec<MenuEntry>,
    pub unserved: Vec<usize>,
}

impl MenuSchedule {
    pub fn empty(types: usize) -> Self {
        Self {
            entries: Vec::new(),
            unserved: (0..types).collect(),
        }
    }

    pub fn entry_for(&self, type_index: usize) -> Option<&MenuEntry> {
        self.entries.iter().find(|e| e.type_index == type_index)
    }

    /// Distinct tests offered, identified by their `(p, μ)` pair.
    pub fn distinct_tests(&self, tol: f64) -> usize {
        let mut seen: Vec<(f64, f64)> = Vec::new();
        for e in &self.entries {
            if !seen
                .iter()
                .any(|&(p, m)| (p - e.p).abs() <= tol && (m - e.mu).abs() <= tol)
            {
                seen.push((e.p, e.mu));
            }
        }
        seen.len()
    }
}

/// A failed model assumption, with the point where it fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub detail: String,
    pub witness: Option<f64>,
}

impl Violation {
    pub(crate) fn new(invariant: &str, detail: impl Into<String>, witness: Option<f64>) -> Self {
        Self {
            invariant: invariant.to_string(),
            detail: detail.into(),
            witness,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)?;
        if let Some(w) = self.witness {
            write!(f, " (at {w})")?;
        }
        Ok(())
    }
}

/// Checks every modelling assumption; an empty list means the environment is valid.
pub fn validate_environment(env: &Environment) -> Vec<Violation> {
    let mut out = Vec::new();
    let (lo, hi) = env.support();
    if !(lo < hi) {
        out.push(Violation::new(
            "support",
            format!("support [{lo}, {hi}] is empty"),
            None,
        ));
        return out;
    }
    validate_states(&env.states, &mut out);
    validate_types(&env.types, &mut out);

    let u = &env.payoffs.u;
    if u.lo() > lo + 1e-12 || u.hi() < hi - 1e-12 {
        out.push(Violation::new(
            "u evaluable on support",
            format!("u is defined on [{}, {}]", u.lo(), u.hi()),
            None,
        ));
    }
    if !(u.inf() < 0.0) {
        out.push(Violation::new("inf u < 0 fails", "u is never negative", Some(u.lo())));
    }
    if !(u.sup() > 0.0) {
        out.push(Violation::new("sup u > 0 fails", "u is never positive", Some(u.lo())));
    }

    let vs = match env.agent_payoffs() {
        Ok(vs) => vs,
        Err(e) => {
            out.push(Violation::new("v family", e.to_string(), None));
            return out;
        }
    };
    if let AgentPayoff::PerType { funcs } = &env.payoffs.v {
        if funcs.len() != env.types.len() {
            out.push(Violation::new(
                "v family",
                format!("{} payoff functions for {} types", funcs.len(), env.types.len()),
                None,
            ));
        }
    }
    for (k, v) in vs.iter().enumerate() {
        let lam = env.types.lambda(k);
        if v.lo() > lo + 1e-12 || v.hi() < hi - 1e-12 {
            out.push(Violation::new(
                "v evaluable on support",
                format!("v(·, {lam}) is defined on [{}, {}]", v.lo(), v.hi()),
                None,
            ));
        }
        if !(v.inf() < 0.0) {
            out.push(Violation::new(
                "inf v < 0 fails",
                format!("v(·, {lam}) is never negative"),
                Some(lam),
            ));
        }
        if !(v.sup() > 0.0) {
            out.push(Violation::new(
                "sup v > 0 fails",
                format!("v(·, {lam}) is never positive"),
                Some(lam),
            ));
        }
    }

    match &env.payoffs.v {
        AgentPayoff::Affine { slope, .. } => {
            if !(slope.inf() > 0.0) && env.types.len() > 1 {
                out.push(Violation::new(
                    "v strictly increasing in λ fails",
                    "the λ-slope of v is not positive everywhere",
                    Some(slope.lo()),
                ));
            }
        }
        AgentPayoff::PerType { .. } => {
            for k in 1..vs.len() {
                let diff = vs[k].add_scaled(&vs[k - 1], -1.0);
                if !(diff.inf() > 0.0) {
                    out.push(Violation::new(
                        "v strictly increasing in λ fails",
                        format!(
                            "v(·, {}) does not exceed v(·, {}) everywhere",
                            env.types.lambda(k),
                            env.types.lambda(k - 1)
                        ),
                        Some(env.types.lambda(k)),
                    ));
                }
            }
        }
    }

    let tol = VALIDATION_TOL;
    for (k, v) in vs.iter().enumerate() {
        let lam = env.types.lambda(k);
        match env.payoffs.alignment {
            Alignment::Positive => {
                let (d, at) = v.worst_decrease();
                if d > tol {
                    out.push(Violation::new(
                        "positive alignment fails",
                        format!("v(·, {lam}) decreases by {d:e}"),
                        Some(at),
                    ));
                }
            }
            Alignment::NegativeConcave | Alignment::NegativeConvex => {
                let (d, at) = v.negated().worst_decrease();
                if d > tol {
                    out.push(Violation::new(
                        "negative alignment fails",
                        format!("v(·, {lam}) increases by {d:e}"),
                        Some(at),
                    ));
                }
                let witness = if env.payoffs.alignment == Alignment::NegativeConcave {
                    v.concavity_witness(tol)
                } else {
                    v.negated().concavity_witness(tol)
                };
                if let Some(at) = witness {
                    out.push(Violation::new(
                        if env.payoffs.alignment == Alignment::NegativeConcave {
                            "concavity fails"
                        } else {
                            "convexity fails"
                        },
                        format!("v(·, {lam}) bends the wrong way"),
                        Some(at),
                    ));
                }
            }
            Alignment::General => {}
        }
    }
    out
}

fn validate_states(states: &StateDistribution, out: &mut Vec<Violation>) {
    let d = &states.density;
    if (d.lo() - states.support_lo).abs() > 1e-12 || (d.hi() - states.support_hi).abs() > 1e-12 {
        out.push(Violation::new(
            "density breakpoints inside support",
            format!(
                "density spans [{}, {}], support is [{}, {}]",
                d.lo(),
                d.hi(),
                states.support_lo,
                states.support_hi
            ),
            None,
        ));
    }
    for i in 0..d.segment_count() {
        let (l, r) = d.segment_values(i);
        let at = d.breakpoints()[i];
        if (l - r).abs() > 1e-15 {
            out.push(Violation::new(
                "density piecewise constant",
                format!("density varies within the cell starting at {at}"),
                Some(at),
            ));
        }
        if !(l > 0.0) {
            out.push(Violation::new(
                "density strictly positive",
                format!("density is {l} on the cell starting at {at}"),
                Some(at),
            ));
        }
    }
    let mass = states.total_mass();
    if (mass - 1.0).abs() > 1e-10 {
        out.push(Violation::new(
            "density integrates to 1",
            format!("total mass is {mass}"),
            None,
        ));
    }
    if states.grid_n == 0 {
        out.push(Violation::new("grid_n positive", "grid_n is zero", None));
    }
}

fn validate_types(types: &TypePrior, out: &mut Vec<Violation>) {
    if types.atoms.is_empty() {
        out.push(Violation::new("type prior nonempty", "no atoms", None));
        return;
    }
    for &(lam, q) in &types.atoms {
        if !(q > 0.0) {
            out.push(Violation::new(
                "type probabilities positive",
                format!("q = {q}"),
                Some(lam),
            ));
        }
    }
    for w in types.atoms.windows(2) {
        if !(w[1].0 > w[0].0) {
            out.push(Violation::new(
                "types strictly increasing",
                format!("λ = {} repeats or decreases", w[1].0),
                Some(w[1].0),
            ));
        }
    }
    let total: f64 = types.atoms.iter().map(|a| a.1).sum();
    if (total - 1.0).abs() > 1e-12 {
        out.push(Violation::new(
            "type probabilities sum to 1",
            format!("sum is {total}"),
            None,
        ));
    }
}

/// Shorthand for the linear specification `u = θ`, `v = λ - θ`.
pub fn linear_environment(states: StateDistribution, types: TypePrior) -> Environment {
    let (lo, hi) = (states.support_lo, states.support_hi);
    Environment {
        payoffs: PayoffSpec {
            u: PiecewiseLinear::identity(lo, hi),
            v: AgentPayoff::linear(lo, hi),
            alignment: Alignment::NegativeConcave,
        },
        states,
        types,
    }
}
