//! Exact integrals over proposal sets and the `(p, μ)` geometry of binary tests.
//!
//! Densities are piecewise constant, so the CDF, the first moment and the
//! quantile function all have closed forms on each density cell.

use serde::{Deserialize, Serialize};

use crate::model::{merge_edges, BinaryTest, PiecewiseLinear, StateDistribution};
use crate::{Error, Result};

const BISECTION_CAP: usize = 200;

/// Proposal probability and conditional means of a binary test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub p: f64,
    pub mu: Option<f64>,
    pub null_p: f64,
    pub null_mu: Option<f64>,
}

/// `∫_a^b f dG`, exact for piecewise-linear `f`.
pub fn integrate_interval(f: &PiecewiseLinear, a: f64, b: f64, dist: &StateDistribution) -> f64 {
    if b <= a {
        return 0.0;
    }
    let inner = |bp: &[f64]| {
        let s = bp.partition_point(|&x| x <= a);
        let e = bp.partition_point(|&x| x < b);
        bp[s..e].to_vec()
    };
    let mut pts = inner(f.breakpoints());
    pts.extend(inner(dist.density.breakpoints()));
    pts.push(a);
    pts.push(b);
    let pts = merge_edges(pts, b - a);
    pts.windows(2)
        .map(|w| {
            let (x, y) = (w[0], w[1]);
            let (fa, fb) = f.linear_on(x, y);
            let g = dist.density.eval(0.5 * (x + y));
            g * (y - x) * (fa + 0.5 * fb * (x + y))
        })
        .sum()
}

/// `∫_{Θ₁} f dG` over the proposal set of `set`.
pub fn integrate(f: &PiecewiseLinear, set: &BinaryTest, dist: &StateDistribution) -> Result<f64> {
    let (lo, hi) = set.support();
    let tol = 1e-12 * dist.width().max(1.0);
    if lo < dist.support_lo - tol || hi > dist.support_hi + tol {
        return Err(Error::SetEscapesSupport);
    }
    Ok(set
        .intervals()
        .iter()
        .map(|&(a, b)| integrate_interval(f, a, b, dist))
        .sum())
}

pub fn summarize(test: &BinaryTest, dist: &StateDistribution) -> Result<PosteriorSummary> {
    let (lo, hi) = (dist.support_lo, dist.support_hi);
    let one = PiecewiseLinear::constant(lo, hi, 1.0);
    let id = PiecewiseLinear::identity(lo, hi);
    let p = integrate(&one, test, dist)?;
    let m = integrate(&id, test, dist)?;
    let total_p = dist.total_mass();
    let total_m = integrate_interval(&id, lo, hi, dist);
    let null_p = total_p - p;
    let ratio = |m: f64, p: f64| (p > 0.0).then(|| m / p);
    Ok(PosteriorSummary {
        p,
        mu: ratio(m, p),
        null_p,
        null_mu: ratio(total_m - m, null_p),
    })
}

/// Closed-form CDF, first moment and quantile of a piecewise-constant density.
#[derive(Clone, Debug)]
pub(crate) struct Cdf {
    edges: Vec<f64>,
    dens: Vec<f64>,
    mass: Vec<f64>,
    moment: Vec<f64>,
}

impl Cdf {
    pub fn new(dist: &StateDistribution) -> Self {
        let edges = merge_edges(
            dist.density
                .breakpoints()
                .iter()
                .copied()
                .chain([dist.support_lo, dist.support_hi])
                .filter(|&x| x >= dist.support_lo && x <= dist.support_hi),
            dist.width(),
        );
        let dens: Vec<f64> = edges
            .windows(2)
            .map(|w| dist.density.eval(0.5 * (w[0] + w[1])))
            .collect();
        let mut mass = vec![0.0];
        let mut moment = vec![0.0];
        for (i, w) in edges.windows(2).enumerate() {
            mass.push(mass[i] + dens[i] * (w[1] - w[0]));
            moment.push(moment[i] + dens[i] * 0.5 * (w[1] - w[0]) * (w[1] + w[0]));
        }
        Self {
            edges,
            dens,
            mass,
            moment,
        }
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    fn cell(&self, x: f64) -> usize {
        self.edges
            .partition_point(|&e| e <= x)
            .saturating_sub(1)
            .min(self.dens.len() - 1)
    }

    pub fn total(&self) -> f64 {
        *self.mass.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        *self.moment.last().unwrap() / self.total()
    }

    /// `G(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo(), self.hi());
        let i = self.cell(x);
        self.mass[i] + self.dens[i] * (x - self.edges[i])
    }

    /// `∫_{lo}^{x} θ dG`.
    pub fn moment(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo(), self.hi());
        let i = self.cell(x);
        let e = self.edges[i];
        self.moment[i] + self.dens[i] * 0.5 * (x - e) * (x + e)
    }

    /// Smallest `x` with `G(x) = q`.
    pub fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.lo();
        }
        if q >= self.total() {
            return self.hi();
        }
        let i = self
            .mass
            .partition_point(|&m| m < q)
            .saturating_sub(1)
            .min(self.dens.len() - 1);
        if self.dens[i] <= 0.0 {
            return self.edges[i + 1];
        }
        (self.edges[i] + (q - self.mass[i]) / self.dens[i]).min(self.edges[i + 1])
    }

    /// `E[θ | θ ≥ t]`.
    pub fn upper_mean(&self, t: f64) -> f64 {
        let m = self.total() - self.cdf(t);
        if m <= 0.0 {
            return self.hi();
        }
        (*self.moment.last().unwrap() - self.moment(t)) / m
    }

    /// `p · μ̄(p)`: the largest `∫_{Θ₁} θ dG` over sets of mass `p`, attained
    /// by the top `p` of the distribution.
    pub fn frontier(&self, p: f64) -> f64 {
        let t = self.quantile(self.total() - p);
        *self.moment.last().unwrap() - self.moment(t)
    }

    /// Slope of [`Cdf::frontier`]: the threshold that leaves mass `p` above it.
    pub fn frontier_slope(&self, p: f64) -> f64 {
        self.quantile(self.total() - p)
    }
}

/// Cutoff `θ_μ` with `E[θ | θ ≥ θ_μ] = μ`.
pub fn theta_mu(mu: f64, dist: &StateDistribution) -> Result<f64> {
    theta_mu_with(&Cdf::new(dist), mu)
}

pub(crate) fn theta_mu_with(cdf: &Cdf, mu: f64) -> Result<f64> {
    let (mean, hi) = (cdf.mean(), cdf.hi());
    let slack = 1e-12 * (hi - cdf.lo()).max(1.0);
    if !mu.is_finite() || mu < mean - slack || mu > hi + slack {
        return Err(Error::InfeasibleMean { mu, lo: mean, hi });
    }
    if mu <= mean {
        return Ok(cdf.lo());
    }
    if mu >= hi {
        return Ok(hi);
    }
    let (mut a, mut b) = (cdf.lo(), hi);
    for _ in 0..BISECTION_CAP {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok(m);
        }
        if cdf.upper_mean(m) < mu {
            a = m;
        } else {
            b = m;
        }
    }
    Err(Error::NoConvergence {
        what: "theta_mu bisection",
        iterations: BISECTION_CAP,
    })
}

/// `1 - G(θ_μ)`: the largest proposal probability compatible with mean `μ`.
pub fn max_feasible_p(mu: f64, dist: &StateDistribution) -> Result<f64> {
    let cdf = Cdf::new(dist);
    let t = theta_mu_with(&cdf, mu)?;
    Ok(cdf.total() - cdf.cdf(t))
}

/// An interval `[a, b]` with proposal probability `p` and conditional mean `μ`.
///
/// The interval is a two-sided trim of `[θ_μ, hi]`: among windows of mass
/// `p`, the conditional mean increases with the lower end, so it is found by
/// bisection. At `p = 1 - G(θ_μ)` the result is the threshold test `[θ_μ, hi]`.
pub fn fit_interval(p: f64, mu: f64, dist: &StateDistribution) -> Result<BinaryTest> {
    let cdf = Cdf::new(dist);
    let (lo, hi) = (cdf.lo(), cdf.hi());
    if !(p > 0.0) || p > cdf.total() + 1e-12 {
        return Err(Error::Invalid(format!("proposal probability {p} outside (0, 1]")));
    }
    let t = theta_mu_with(&cdf, mu)?;
    let max_p = cdf.total() - cdf.cdf(t);
    if p > max_p * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::NotInducible { p, mu, max_p });
    }
    if p >= max_p - 1e-12 {
        return BinaryTest::threshold(t, lo, hi);
    }
    // window [Q(s), Q(s + p)] for s in [0, 1 - p]
    let window_mean = |s: f64| {
        let (a, b) = (cdf.quantile(s), cdf.quantile(s + p));
        (cdf.moment(b) - cdf.moment(a)) / (cdf.mass_between(a, b))
    };
    let (mut s0, mut s1) = (0.0, cdf.total() - p);
    for _ in 0..BISECTION_CAP {
        let s = 0.5 * (s0 + s1);
        if s <= s0 || s >= s1 {
            let (a, b) = (cdf.quantile(s), cdf.quantile(s + p));
            return BinaryTest::interval(a, b.min(hi), lo, hi);
        }
        if window_mean(s) < mu {
            s0 = s;
        } else {
            s1 = s;
        }
    }
    Err(Error::NoConvergence {
        what: "fit_interval bisection",
        iterations: BISECTION_CAP,
    })
}

impl Cdf {
    fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }
}

/// `E[θ]`.
pub fn mean(dist: &StateDistribution) -> f64 {
    Cdf::new(dist).mean()
}
