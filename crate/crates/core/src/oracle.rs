//! Brute-force ground truth on coarse grids.
//!
//! Every oracle works on a fixed cell grid. [`discretize`] replaces the
//! density and payoffs by their cell averages, which leaves every cell
//! integral unchanged; the oracles then enumerate sets of cells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    evaluate, evaluate_kernel, outcome, CellIntegrals, EvalReport, INTEGRAL_TOL,
};
use crate::measure::{integrate, integrate_interval};
use crate::model::{
    AgentPayoff, Alignment, BinaryTest, Environment, FormTag, GeneralTest, PayoffSpec,
    PiecewiseLinear, StateDistribution,
};
use crate::solver_single::SolveReport;
use crate::{Error, Result};

/// Largest grid the subset oracle accepts.
pub const MAX_CELLS: usize = 22;
/// Largest pool the menu oracle accepts.
pub const MAX_POOL: usize = 12;
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Payoff tolerance of the oracle tie-break.
const TIE: f64 = 1e-13;
/// Agent indifference and acceptance tolerance of the menu oracle, loose
/// enough to absorb rounding in menus priced to bind.
pub const MENU_TIE: f64 = 1e-9;

/// `env` with density and payoffs replaced by their averages on each cell of
/// `edges`. Affine agent payoffs stay affine in `λ`.
pub fn discretize(env: &Environment, edges: &[f64]) -> Result<Environment> {
    check_edges(env, edges)?;
    let dist = &env.states;
    let (lo, hi) = env.support();
    let one = PiecewiseLinear::constant(lo, hi, 1.0);
    let mass: Vec<f64> = edges
        .windows(2)
        .map(|w| integrate_interval(&one, w[0], w[1], dist))
        .collect();
    let average = |f: &PiecewiseLinear| -> Result<PiecewiseLinear> {
        let levels = edges
            .windows(2)
            .zip(&mass)
            .map(|(w, &m)| integrate_interval(f, w[0], w[1], dist) / m)
            .collect();
        PiecewiseLinear::steps(edges.to_vec(), levels)
    };
    let density = PiecewiseLinear::steps(
        edges.to_vec(),
        edges
            .windows(2)
            .zip(&mass)
            .map(|(w, &m)| m / (w[1] - w[0]))
            .collect(),
    )?;
    let v = match &env.payoffs.v {
        AgentPayoff::Affine { base, slope } => AgentPayoff::Affine {
            base: average(base)?,
            slope: average(slope)?,
        },
        AgentPayoff::PerType { funcs } => AgentPayoff::PerType {
            funcs: funcs.iter().map(average).collect::<Result<_>>()?,
        },
    };
    Ok(Environment {
        states: StateDistribution {
            grid_n: dist.grid_n,
            ..StateDistribution::new(density)
        },
        payoffs: PayoffSpec {
            u: average(&env.payoffs.u)?,
            v,
            alignment: Alignment::General,
        },
        types: env.types.clone(),
    })
}

fn check_edges(env: &Environment, edges: &[f64]) -> Result<()> {
    let (lo, hi) = env.support();
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("grid edges must be strictly increasing".into()));
    }
    let tol = 1e-12 * (hi - lo).max(1.0);
    if (edges[0] - lo).abs() > tol || (edges[edges.len() - 1] - hi).abs() > tol {
        return Err(Error::Invalid("grid must span the support".into()));
    }
    Ok(())
}

/// `n` equal cells over the support.
pub fn uniform_edges(env: &Environment, n: usize) -> Vec<f64> {
    let (lo, hi) = env.support();
    (0..=n)
        .map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
        .collect()
}

/// Per-cell sums over subsets, via two half tables.
struct SubsetSums {
    low_bits: usize,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl SubsetSums {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let low_bits = n / 2;
        let table = |vals: &[f64]| {
            let mut t = vec![0.0; 1 << vals.len()];
            for m in 1..t.len() {
                let b = m.trailing_zeros() as usize;
                t[m] = t[m & (m - 1)] + vals[b];
            }
            t
        };
        Self {
            low_bits,
            low: table(&values[..low_bits]),
            high: table(&values[low_bits..]),
        }
    }

    #[inline]
    fn sum(&self, mask: usize) -> f64 {
        self.low[mask & ((1 << self.low_bits) - 1)] + self.high[mask >> self.low_bits]
    }
}

/// One oracle candidate: a cell subset, optionally plus a fraction of one
/// more cell.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    payoff: f64,
    mass: f64,
    mask: usize,
    split: Option<(usize, f64)>,
}

impl Candidate {
    /// Indicator with cell 0 first, as an integer for lexicographic order.
    fn key(&self, n: usize) -> (usize, bool) {
        let m = self.mask | self.split.map_or(0, |(j, _)| 1 << j);
        (m.reverse_bits() >> (usize::BITS as usize - n), self.split.is_some())
    }

    fn beats(&self, other: &Candidate, n: usize) -> bool {
        if self.payoff > other.payoff + TIE {
            return true;
        }
        if self.payoff < other.payoff - TIE {
            return false;
        }
        if (self.mass - other.mass).abs() > 1e-15 {
            return self.mass < other.mass;
        }
        self.key(n) < other.key(n)
    }
}

/// Which candidates a search may return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Filter {
    All,
    Shape(FormTag),
}

struct Search<'a> {
    env: &'a Environment,
    edges: &'a [f64],
    cells: CellIntegrals,
    mean_u: f64,
    best: Candidate,
    examined: usize,
}

impl<'a> Search<'a> {
    fn new(env: &'a Environment, edges: &'a [f64]) -> Result<Self> {
        check_edges(env, edges)?;
        let n = edges.len() - 1;
        if n > MAX_CELLS {
            return Err(Error::TooManyCells {
                cells: n,
                limit: MAX_CELLS,
            });
        }
        let cells = CellIntegrals::new(env, edges)?;
        let mean_u = cells.u.iter().sum();
        Ok(Self {
            env,
            edges,
            cells,
            mean_u,
            best: Candidate {
                payoff: 0.0,
                mass: 0.0,
                mask: 0,
                split: None,
            },
            examined: 1,
        })
    }

    fn n(&self) -> usize {
        self.cells.cells()
    }

    fn offer(&mut self, c: Candidate) {
        self.examined += 1;
        if c.beats(&self.best, self.n()) {
            self.best = c;
        }
    }

    /// Scores `mask` and every single-cell split completing it.
    fn visit(&mut self, mask: usize, u: f64, mass: f64, v: &[f64], max_gain: f64, filter: Filter) {
        let types = &self.env.types;
        if mask != 0 && self.admits(mask, None, filter) {
            let o = outcome(true, u, self.mean_u - u, v.iter().copied(), types);
            if o.trustworthy {
                self.offer(Candidate {
                    payoff: o.payoff,
                    mass,
                    mask,
                    split: None,
                });
            }
        }
        // a split cell j makes type k exactly indifferent, from either side
        for k in 0..v.len() {
            let tail = types.tail(k);
            if (u + max_gain) * tail < self.best.payoff - TIE {
                continue;
            }
            for j in (0..self.n()).filter(|j| mask & (1 << j) == 0) {
                let vj = self.cells.v[k][j];
                let f = -v[k] / vj;
                if !(f > 0.0 && f < 1.0) {
                    continue;
                }
                let total = u + f * self.cells.u[j];
                if total < -INTEGRAL_TOL || self.mean_u - total > INTEGRAL_TOL {
                    continue;
                }
                if !self.admits(mask, Some((j, f)), filter) {
                    continue;
                }
                self.offer(Candidate {
                    payoff: total.max(0.0) * tail,
                    mass: mass + f * self.cells.mass[j],
                    mask,
                    split: Some((j, f)),
                });
            }
        }
    }

    fn admits(&self, mask: usize, split: Option<(usize, f64)>, filter: Filter) -> bool {
        match filter {
            Filter::All => true,
            Filter::Shape(shape) => match self.realize(mask, split) {
                Ok(t) => fits_shape(&t, shape),
                Err(_) => false,
            },
        }
    }

    /// The proposal set of a candidate. A split fraction sits against the
    /// neighbouring included cell so that blocks stay contiguous.
    fn realize(&self, mask: usize, split: Option<(usize, f64)>) -> Result<BinaryTest> {
        let (lo, hi) = self.env.support();
        let e = self.edges;
        let mut pieces: Vec<(f64, f64)> = (0..self.n())
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| (e[i], e[i + 1]))
            .collect();
        if let Some((j, f)) = split {
            let w = f * (e[j + 1] - e[j]);
            let right = j + 1 < self.n() && mask & (1 << (j + 1)) != 0;
            let left = j > 0 && mask & (1 << (j - 1)) != 0;
            let at_left = !right && (left || j == 0);
            pieces.push(if at_left {
                (e[j], e[j] + w)
            } else {
                (e[j + 1] - w, e[j + 1])
            });
        }
        BinaryTest::new(pieces, lo, hi)
    }

    fn run(&mut self, filter: Filter) {
        let n = self.n();
        let mass = SubsetSums::new(&self.cells.mass);
        let u = SubsetSums::new(&self.cells.u);
        let v: Vec<SubsetSums> = self.cells.v.iter().map(|vk| SubsetSums::new(vk)).collect();
        let max_gain = self.cells.u.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut buf = vec![0.0; v.len()];
        for mask in 0..(1usize << n) {
            if let Filter::Shape(_) = filter {
                // shapes have at most two blocks of whole cells
                if block_count(mask) > 2 {
                    continue;
                }
            }
            for (b, s) in buf.iter_mut().zip(&v) {
                *b = s.sum(mask);
            }
            self.visit(mask, u.sum(mask), mass.sum(mask), &buf, max_gain, filter);
        }
    }

    fn report(self) -> Result<SolveReport> {
        let test = self.realize(self.best.mask, self.best.split)?;
        let disc = discretize(self.env, self.edges)?;
        let eval: EvalReport = evaluate(&test, &disc)?;
        Ok(SolveReport {
            payoff: eval.principal_payoff,
            lambda_star: eval.cutoff_lambda,
            cutoff_index: eval.acceptance_cutoff,
            eta: None,
            form: test.form(),
            best_test: test,
            candidates_examined: self.examined,
            skipped: Vec::new(),
            grid_cells: self.n(),
            eval,
        })
    }
}

fn block_count(mask: usize) -> u32 {
    (mask & !(mask << 1)).count_ones()
}

/// Whether a proposal set has the given shape, degenerate cases included:
/// a threshold set is empty or reaches the top; an interval is a single
/// block; a tail set's complement is a single block.
pub fn fits_shape(test: &BinaryTest, shape: FormTag) -> bool {
    let (lo, hi) = test.support();
    let tol = 1e-12 * (hi - lo).max(1.0);
    let iv = test.intervals();
    let at_lo = |x: f64| (x - lo).abs() <= tol;
    let at_hi = |x: f64| (x - hi).abs() <= tol;
    match shape {
        FormTag::Empty => iv.is_empty(),
        FormTag::Threshold => iv.is_empty() || (iv.len() == 1 && at_hi(iv[0].1)),
        FormTag::Interval => iv.len() <= 1,
        FormTag::Tail => match iv.len() {
            0 => true,
            1 => at_lo(iv[0].0) || at_hi(iv[0].1),
            2 => at_lo(iv[0].0) && at_hi(iv[1].1),
            _ => false,
        },
        FormTag::General => true,
    }
}

/// Best trustworthy binary test on the grid `edges`.
///
/// Every subset of cells is evaluated exactly. The optimum for a given
/// accepting type is a vertex of a linear program with at most one partly
/// included cell, so each subset is also completed by every single split
/// cell that makes some type exactly indifferent; those candidates are scored
/// with that type as the cutoff. The winner is evaluated on
/// `discretize(env, edges)`. Ties go to the smaller proposal mass, then the
/// lexicographically smaller indicator.
pub fn brute_force_best_test(env: &Environment, edges: &[f64]) -> Result<SolveReport> {
    let mut s = Search::new(env, edges)?;
    s.run(Filter::All);
    s.report()
}

/// [`brute_force_best_test`] restricted to sets of one shape (see
/// [`fits_shape`]).
pub fn brute_force_best_shape(
    env: &Environment,
    edges: &[f64],
    shape: FormTag,
) -> Result<SolveReport> {
    let mut s = Search::new(env, edges)?;
    s.run(Filter::Shape(shape));
    s.report()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub signal_count: usize,
    pub binary_payoff: f64,
    /// Best payoff of a trustworthy multi-signal test found.
    pub max_general_payoff: f64,
    pub kernels_examined: usize,
    pub trustworthy_kernels: usize,
    pub exhaustive: bool,
    pub seed: u64,
    /// A trustworthy test beating the binary optimum by more than `1e-9`.
    pub witness: Option<GeneralTest>,
}

impl SufficiencyReport {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// Largest grid on which three-signal deterministic kernels are enumerated.
pub const EXHAUSTIVE_CELLS: usize = 8;

/// Compares trustworthy `signal_count`-signal tests on the grid `edges`
/// against the best binary test there.
///
/// For three signals on at most [`EXHAUSTIVE_CELLS`] cells every
/// deterministic kernel is checked; otherwise, and in addition, `samples`
/// random kernels are drawn from `seed`, half deterministic and half mixed.
pub fn verify_binary_sufficiency(
    env: &Environment,
    edges: &[f64],
    signal_count: usize,
    samples: usize,
    seed: u64,
) -> Result<SufficiencyReport> {
    if signal_count < 2 {
        return Err(Error::Invalid("at least two signals needed".into()));
    }
    let binary = brute_force_best_test(env, edges)?.payoff;
    let cells = CellIntegrals::new(env, edges)?;
    let n = cells.cells();
    let k = signal_count;
    let labels: Vec<String> = (0..k).map(|s| format!("s{s}")).collect();
    let mut report = SufficiencyReport {
        signal_count: k,
        binary_payoff: binary,
        max_general_payoff: 0.0,
        kernels_examined: 0,
        trustworthy_kernels: 0,
        exhaustive: false,
        seed,
        witness: None,
    };
    let check = |kernel: Vec<Vec<f64>>, report: &mut SufficiencyReport| -> Result<()> {
        report.kernels_examined += 1;
        let r = evaluate_kernel(&cells, &env.types, &kernel, &labels);
        if !r.trustworthy {
            return Ok(());
        }
        report.trustworthy_kernels += 1;
        if r.truthful_payoff > report.max_general_payoff {
            report.max_general_payoff = r.truthful_payoff;
            if r.truthful_payoff > binary + 1e-9 {
                report.witness = Some(GeneralTest::new(edges.to_vec(), labels.clone(), kernel)?);
            }
        }
        Ok(())
    };
    let one_hot = |s: usize| {
        let mut row = vec![0.0; k];
        row[s] = 1.0;
        row
    };
    if k == 3 && n <= EXHAUSTIVE_CELLS {
        report.exhaustive = true;
        let mut digits = vec![0usize; n];
        loop {
            check(digits.iter().map(|&s| one_hot(s)).collect(), &mut report)?;
            let mut i = 0;
            while i < n {
                digits[i] += 1;
                if digits[i] < k {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..samples {
        let mixed = t % 2 == 1;
        let kernel = (0..n)
            .map(|_| {
                if !mixed || rng.gen_bool(0.5) {
                    one_hot(rng.gen_range(0..k))
                } else {
                    // flat Dirichlet row
                    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                    let s: f64 = w.iter().sum();
                    let mut row: Vec<f64> = w.iter().map(|x| x / s).collect();
                    let rest: f64 = row[1..].iter().sum();
                    row[0] = 1.0 - rest;
                    row
                }
            })
            .collect();
        check(kernel, &mut report)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuOracleReport {
    pub payoff: f64,
    /// Pool indices offered in the best menu.
    pub menu: Vec<usize>,
    /// Pool index each type picks and accepts; `None` when it rejects.
    pub choices: Vec<Option<usize>>,
    /// Best payoff among menus of exactly `i` tests.
    pub best_by_size: Vec<Option<f64>>,
    pub menus_examined: usize,
}

impl MenuOracleReport {
    /// Best payoff over menus with at most `size` tests.
    pub fn best_up_to(&self, size: usize) -> f64 {
        self.best_by_size
            .iter()
            .take(size + 1)
            .flatten()
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// Best menu drawn from `pool`.
///
/// Each type picks the test with the highest value `max(0, ∫_{Θ₁} v dG)`,
/// accepting when the integral is nonnegative; ties go to the test the
/// principal prefers. Both comparisons use [`MENU_TIE`]. Only menus of
/// trustworthy tests count. Ties between menus go to the one with fewer
/// tests.
pub fn brute_force_menu(env: &Environment, pool: &[BinaryTest]) -> Result<MenuOracleReport> {
    if pool.len() > MAX_POOL {
        return Err(Error::TooManyCells {
            cells: pool.len(),
            limit: MAX_POOL,
        });
    }
    let dist = &env.states;
    let vs = env.agent_payoffs()?;
    let mut pv = Vec::with_capacity(pool.len());
    let mut agent = Vec::with_capacity(pool.len());
    let mut trusted = Vec::with_capacity(pool.len());
    for t in pool {
        let u = integrate(&env.payoffs.u, t, dist)?;
        let null = integrate(&env.payoffs.u, &t.complement(), dist)?;
        let v: Vec<f64> = vs
            .iter()
            .map(|f| integrate(f, t, dist))
            .collect::<Result<_>>()?;
        trusted.push(t.is_empty() || (null <= INTEGRAL_TOL && u >= -INTEGRAL_TOL));
        pv.push(u);
        agent.push(v);
    }
    let types = &env.types;
    let mut best = MenuOracleReport {
        payoff: 0.0,
        menu: Vec::new(),
        choices: vec![None; types.len()],
        best_by_size: vec![None; pool.len() + 1],
        menus_examined: 1,
    };
    best.best_by_size[0] = Some(0.0);
    for mask in 1usize..(1 << pool.len()) {
        let menu: Vec<usize> = (0..pool.len()).filter(|&i| mask & (1 << i) != 0).collect();
        if menu.iter().any(|&i| !trusted[i]) {
            continue;
        }
        best.menus_examined += 1;
        let mut payoff = 0.0;
        let mut choices = Vec::with_capacity(types.len());
        for k in 0..types.len() {
            // (agent value, principal value, pool index)
            let mut pick: Option<(f64, f64, usize)> = None;
            for &i in &menu {
                let accepts = !pool[i].is_empty() && agent[i][k] >= -MENU_TIE;
                let a = if accepts { agent[i][k].max(0.0) } else { 0.0 };
                let p = if accepts { pv[i] } else { 0.0 };
                let better = match pick {
                    None => true,
                    Some((ba, bp, _)) => a > ba + MENU_TIE || (a >= ba - MENU_TIE && p > bp),
                };
                if better {
                    pick = Some((a, p, i));
                }
            }
            let (_, p, i) = pick.expect("menus are nonempty");
            let accepts = !pool[i].is_empty() && agent[i][k] >= -MENU_TIE;
            payoff += types.prob(k) * p;
            choices.push(accepts.then_some(i));
        }
        let size = menu.len();
        let slot = &mut best.best_by_size[size];
        *slot = Some(slot.map_or(payoff, |b: f64| b.max(payoff)));
        if payoff > best.payoff + TIE {
            best.payoff = payoff;
            best.menu = menu;
            best.choices = choices;
        } else if payoff >= best.payoff - TIE && size < best.menu.len() {
            best.menu = menu;
            best.choices = choices;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{linear_environment, TypePrior};
    use crate::presets;

    fn fig1_edges() -> Vec<f64> {
        vec![-1.0, -0.775, -0.55, -0.275, 0.0, 0.25, 0.5, 0.75, 1.0]
    }

    #[test]
    fn fig1_reduced_on_aligned_grid() {
        let env = presets::fig1(0.1, true).unwrap();
        let r = brute_force_best_test(&env, &fig1_edges()).unwrap();
        assert!((r.payoff - 0.025).abs() < 1e-12, "{}", r.payoff);
        let iv = r.best_test.intervals();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 0.55).abs() < 1e-12 && (iv[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fig1_original_is_empty() {
        let env = presets::fig1(0.1, false).unwrap();
        let r = brute_force_best_test(&env, &fig1_edges()).unwrap();
        assert_eq!(r.payoff, 0.0);
        assert!(r.best_test.is_empty());
    }

    #[test]
    fn unconstrained_case_takes_positive_cells() {
        // the agent always accepts, so the principal keeps every cell with u ≥ 0
        let env = linear_environment(StateDistribution::uniform(-1.0, 1.0), TypePrior::degenerate(5.0));
        let edges = uniform_edges(&env, 8);
        let r = brute_force_best_test(&env, &edges).unwrap();
        assert!((r.payoff - 0.25).abs() < 1e-12);
        assert_eq!(r.best_test.intervals(), &[(0.0, 1.0)]);
    }

    #[test]
    fn split_cells_reach_the_continuum_optimum() {
        // single type 1/3 on 4 cells: [0, 1] leaves the agent at -1/12; cell
        // [-1/2, 0] carries v = 7/48, so 4/7 of it is added, worth -1/28
        let env = linear_environment(StateDistribution::uniform(-1.0, 1.0), TypePrior::degenerate(1.0 / 3.0));
        let r = brute_force_best_test(&env, &uniform_edges(&env, 4)).unwrap();
        assert!((r.payoff - 3.0 / 14.0).abs() < 1e-12, "{}", r.payoff);
        let (a, b) = r.best_test.intervals()[0];
        assert!((a + 2.0 / 7.0).abs() < 1e-12 && b == 1.0);
    }

    #[test]
    fn split_can_spend_agent_slack() {
        // cell 1 alone leaves the agent 1/3 of slack; half of cell 2 spends it
        let edges = vec![-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0];
        let env = Environment {
            states: StateDistribution::from_weights(edges.clone(), &[1.0, 1.0, 1.0]).unwrap(),
            payoffs: PayoffSpec {
                u: PiecewiseLinear::steps(edges.clone(), vec![-1.0, 0.5, 0.4]).unwrap(),
                v: AgentPayoff::shifted(PiecewiseLinear::steps(edges.clone(), vec![0.0, 1.0, -2.0]).unwrap()),
                alignment: Alignment::General,
            },
            types: TypePrior::degenerate(0.0),
        };
        let r = brute_force_best_test(&env, &edges).unwrap();
        assert!((r.payoff - 0.7 / 3.0).abs() < 1e-12, "{}", r.payoff);
        let (a, b) = r.best_test.intervals()[0];
        assert!((a + 1.0 / 3.0).abs() < 1e-12 && (b - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_grids() {
        let env = presets::menu51(0.01).unwrap();
        assert!(matches!(
            brute_force_best_test(&env, &uniform_edges(&env, 23)),
            Err(Error::TooManyCells { cells: 23, .. })
        ));
    }

    #[test]
    fn discretize_keeps_cell_integrals() {
        let env = presets::menu51(0.01).unwrap();
        let edges = vec![-1.0, -0.3, 0.2, 1.0];
        let d = discretize(&env, &edges).unwrap();
        let a = CellIntegrals::new(&env, &edges).unwrap();
        let b = CellIntegrals::new(&d, &edges).unwrap();
        for i in 0..3 {
            assert!((a.u[i] - b.u[i]).abs() < 1e-15);
            assert!((a.v[1][i] - b.v[1][i]).abs() < 1e-15);
            assert!((a.mass[i] - b.mass[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn shapes() {
        let t = BinaryTest::tail(-0.5, 0.5, -1.0, 1.0).unwrap();
        assert!(fits_shape(&t, FormTag::Tail));
        assert!(!fits_shape(&t, FormTag::Interval));
        let t = BinaryTest::interval(-1.0, 0.5, -1.0, 1.0).unwrap();
        assert!(fits_shape(&t, FormTag::Tail) && fits_shape(&t, FormTag::Interval));
        assert!(!fits_shape(&t, FormTag::Threshold));
        assert_eq!(block_count(0b0110_0111), 2);
    }

    #[test]
    fn sufficiency_on_two_types() {
        let env = presets::menu51(0.5).unwrap();
        let edges = uniform_edges(&env, 8);
        let r = verify_binary_sufficiency(&env, &edges, 3, 200, DEFAULT_SEED).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.kernels_examined, 6561 + 200);
        assert!(r.holds(), "{r:?}");
        let again = verify_binary_sufficiency(&env, &edges, 3, 200, DEFAULT_SEED).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn sufficiency_fig1_original_is_zero() {
        let env = presets::fig1(0.1, false).unwrap();
        let r = verify_binary_sufficiency(&env, &fig1_edges(), 3, 100, 7).unwrap();
        assert_eq!(r.max_general_payoff, 0.0);
        assert_eq!(r.binary_payoff, 0.0);
    }

    #[test]
    fn two_test_menu_from_pool() {
        let eps = 0.01;
        let env = presets::menu51(eps).unwrap();
        let pool = vec![
            BinaryTest::threshold(0.0, -1.0, 1.0).unwrap(),
            BinaryTest::interval(1.0 / 12.0, 7.0 / 12.0, -1.0, 1.0).unwrap(),
            BinaryTest::threshold(-1.0 / 3.0, -1.0, 1.0).unwrap(),
        ];
        let r = brute_force_menu(&env, &pool).unwrap();
        assert_eq!(r.menu, vec![0, 1]);
        assert!((r.payoff - ((1.0 - eps) / 4.0 + eps / 12.0)).abs() < 1e-12);
        assert_eq!(r.choices, vec![Some(1), Some(0)]);
        assert!((r.best_up_to(1) - (1.0 - eps) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_test_pool_matches_evaluate() {
        let env = presets::menu51(0.3).unwrap();
        let t = BinaryTest::threshold(0.1, -1.0, 1.0).unwrap();
        let r = brute_force_menu(&env, std::slice::from_ref(&t)).unwrap();
        let e = evaluate(&t, &env).unwrap();
        assert!((r.payoff - e.principal_payoff).abs() < 1e-15);
    }
}
