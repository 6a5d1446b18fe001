//! Breakpoint-aligned cell table with exact per-cell integrals.
//!
//! On every cell the density is constant and each payoff is a single affine
//! piece, so `∫ f dG` over any sub-interval is a closed-form quadratic.

use crate::model::{merge_edges, Environment};
use crate::Result;

/// `a + b θ` on one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Lin {
    pub a: f64,
    pub b: f64,
}

impl Lin {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.a + self.b * x
    }

    /// `∫_x^y (a + b θ) dθ`.
    pub fn integral(&self, x: f64, y: f64) -> f64 {
        (y - x) * (self.a + 0.5 * self.b * (x + y))
    }

    pub fn add_scaled(&self, other: &Lin, s: f64) -> Lin {
        Lin::new(self.a + s * other.a, self.b + s * other.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Field {
    Mass,
    Theta,
    U,
    V(usize),
}

impl Field {
    fn index(self) -> usize {
        match self {
            Field::Mass => 0,
            Field::Theta => 1,
            Field::U => 2,
            Field::V(k) => 3 + k,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CellTable {
    pub edges: Vec<f64>,
    pub dens: Vec<f64>,
    pub u: Vec<Lin>,
    /// `v[k][i]`: type `k` on cell `i`.
    pub v: Vec<Vec<Lin>>,
    cum: Vec<Vec<f64>>,
}

impl CellTable {
    /// Cells bounded by every breakpoint of `env`, the `extra` points, and a
    /// uniform grid of `grid_n` cells (`0` for breakpoints only).
    pub fn new(env: &Environment, extra: &[f64], grid_n: usize) -> Result<Self> {
        let (lo, hi) = env.support();
        let grid = (0..=grid_n).map(|i| lo + (hi - lo) * i as f64 / grid_n.max(1) as f64);
        let pts = env
            .breakpoints()
            .into_iter()
            .chain(extra.iter().copied().filter(|&x| x > lo && x < hi))
            .chain(grid.filter(|_| grid_n > 0));
        let edges = merge_edges(pts, hi - lo);
        let vs = env.agent_payoffs()?;
        let n = edges.len() - 1;
        let mut dens = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        let mut v = vec![Vec::with_capacity(n); vs.len()];
        for w in edges.windows(2) {
            dens.push(env.states.density.eval(0.5 * (w[0] + w[1])));
            let (a, b) = env.payoffs.u.linear_on(w[0], w[1]);
            u.push(Lin::new(a, b));
            for (k, f) in vs.iter().enumerate() {
                let (a, b) = f.linear_on(w[0], w[1]);
                v[k].push(Lin::new(a, b));
            }
        }
        let mut table = Self {
            edges,
            dens,
            u,
            v,
            cum: Vec::new(),
        };
        table.cum = (0..3 + table.v.len())
            .map(|f| {
                let field = match f {
                    0 => Field::Mass,
                    1 => Field::Theta,
                    2 => Field::U,
                    k => Field::V(k - 3),
                };
                let mut acc = vec![0.0; n + 1];
                for i in 0..n {
                    acc[i + 1] = acc[i] + table.cell_part(field, i, table.edges[i], table.edges[i + 1]);
                }
                acc
            })
            .collect();
        Ok(table)
    }

    pub fn n(&self) -> usize {
        self.dens.len()
    }

    pub fn types(&self) -> usize {
        self.v.len()
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn lin(&self, field: Field, i: usize) -> Lin {
        match field {
            Field::Mass => Lin::new(1.0, 0.0),
            Field::Theta => Lin::new(0.0, 1.0),
            Field::U => self.u[i],
            Field::V(k) => self.v[k][i],
        }
    }

    /// `∫_x^y f dG` for `[x, y]` inside cell `i`.
    pub fn cell_part(&self, field: Field, i: usize, x: f64, y: f64) -> f64 {
        self.dens[i] * self.lin(field, i).integral(x, y)
    }

    pub fn cell_total(&self, field: Field, i: usize) -> f64 {
        let c = &self.cum[field.index()];
        c[i + 1] - c[i]
    }

    pub fn total(&self, field: Field) -> f64 {
        *self.cum[field.index()].last().unwrap()
    }

    /// `∫ f dG` over edges `i..j` (cells `i` to `j - 1`).
    pub fn between_edges(&self, field: Field, i: usize, j: usize) -> f64 {
        let c = &self.cum[field.index()];
        c[j] - c[i]
    }

    pub fn cell_of(&self, x: f64) -> usize {
        self.edges
            .partition_point(|&e| e <= x)
            .saturating_sub(1)
            .min(self.n() - 1)
    }

    /// `∫_x^y f dG`, zero when `y <= x`.
    pub fn integral(&self, field: Field, x: f64, y: f64) -> f64 {
        if y <= x {
            return 0.0;
        }
        let (i, j) = (self.cell_of(x), self.cell_of(y));
        if i == j {
            return self.cell_part(field, i, x, y);
        }
        let c = &self.cum[field.index()];
        self.cell_part(field, i, x, self.edges[i + 1])
            + (c[j] - c[i + 1])
            + self.cell_part(field, j, self.edges[j], y)
    }

    /// All `y` in `(x0, x1]` of cell `i` with `∫_{x0}^{y} f dG = target`.
    pub fn roots_in_cell(&self, field: Field, i: usize, x0: f64, x1: f64, target: f64) -> Vec<f64> {
        let d = self.dens[i];
        let l = self.lin(field, i);
        // d (a (y - x0) + b/2 (y² - x0²)) - target = 0
        let c2 = 0.5 * d * l.b;
        let c1 = d * l.a;
        let c0 = -d * (l.a * x0 + 0.5 * l.b * x0 * x0) - target;
        let tol = 1e-14 * (x1 - x0).abs().max(1.0);
        quadratic_roots(c2, c1, c0)
            .into_iter()
            .filter(|&y| y > x0 - tol && y <= x1 + tol)
            .map(|y| {
                let y = polish(|t| self.cell_part(field, i, x0, t) - target, |t| d * l.at(t), y);
                y.clamp(x0, x1)
            })
            .collect()
    }
}

/// Real roots of `c2 x² + c1 x + c0`, ascending; degenerate cases fall back
/// to the linear equation.
pub(crate) fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c1.abs().max(c0.abs()).max(1e-300);
    if c2.abs() <= 1e-14 * scale {
        if c1 == 0.0 {
            return Vec::new();
        }
        return vec![-c0 / c1];
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        if disc > -1e-14 * c1 * c1 {
            return vec![-c1 / (2.0 * c2)];
        }
        return Vec::new();
    }
    let sign = if c1 < 0.0 { -1.0 } else { 1.0 };
    let q = -0.5 * (c1 + sign * disc.sqrt());
    let mut r = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / c2, c0 / q]
    };
    r.sort_by(f64::total_cmp);
    r
}

/// Two Newton steps; harmless when the derivative vanishes.
fn polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut x: f64) -> f64 {
    for _ in 0..2 {
        let d = df(x);
        if d.abs() < 1e-300 {
            break;
        }
        let step = f(x) / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linear_environment, StateDistribution, TypePrior};

    #[test]
    fn integrals_match_hand_values() {
        let env = linear_environment(StateDistribution::uniform(-1.0, 1.0), TypePrior::degenerate(0.5));
        let t = CellTable::new(&env, &[0.3], 10).unwrap();
        assert!((t.integral(Field::Theta, 0.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((t.integral(Field::Mass, -0.35, 0.55) - 0.45).abs() < 1e-15);
        // ∫_{-1}^{1} (0.5 - θ)/2 dθ = 0.5
        assert!((t.total(Field::V(0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn roots_inside_a_cell() {
        let env = linear_environment(StateDistribution::uniform(-1.0, 1.0), TypePrior::degenerate(0.5));
        let t = CellTable::new(&env, &[], 1).unwrap();
        // ∫_0^y θ/2 dθ = y²/4 = 1/16  ⇒  y = 1/2
        let r = t.roots_in_cell(Field::Theta, 0, 0.0, 1.0, 1.0 / 16.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_roots_are_stable() {
        let r = quadratic_roots(1.0, -1e8, 1.0);
        assert!((r[0] - 1e-8).abs() < 1e-20);
        assert!((r[1] - 1e8).abs() < 1e-6);
        assert_eq!(quadratic_roots(0.0, 2.0, -1.0), vec![0.5]);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
    }
}
