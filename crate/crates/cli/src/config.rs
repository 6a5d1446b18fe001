//! JSON config schema.
//!
//! ```json
//! {
//!   "distribution": { "support_lo": -1, "support_hi": 1,
//!                     "density": { "breaks": [-1, 1], "levels": [0.5] } },
//!   "u": { "knots": [-1, 1], "values": [-1, 1] },
//!   "v": { "affine": { "base": { "knots": [-1, 1], "values": [1, -1] },
//!                      "slope": { "breaks": [-1, 1], "levels": [1] } } },
//!   "alignment": "general",
//!   "types": { "atoms": [[0.333, 0.5], [0.667, 0.5]] },
//!   "command": "menu",
//!   "solver-options": { "grid-n": 4000 }
//! }
//! ```
//!
//! Piecewise functions accept `{breaks, levels}` (steps), `{knots, values}`
//! (continuous) or `{breaks, left, right}` (segments).

use anyhow::{Context, Result};
use consent_core::extensions::RichActionSpec;
use consent_core::{AgentPayoff, Alignment, Environment, PayoffSpec, PiecewiseLinear, StateDistribution, TypePrior};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Menu,
    Oracle,
    VerifyBinary,
    MultiAgent,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Menu => "menu",
            Command::Oracle => "oracle",
            Command::VerifyBinary => "verify-binary",
            Command::MultiAgent => "multi-agent",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Structured solver picked from the alignment tag, general otherwise.
    Auto,
    #[default]
    General,
    Threshold,
    Interval,
    Tail,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default)]
    pub solver: SolverKind,
    /// Overrides the distribution's scan grid.
    pub grid_n: Option<usize>,
    /// Oracle grid: explicit edges, or this many equal cells.
    pub edges: Option<Vec<f64>>,
    pub cells: Option<usize>,
    pub signals: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Agents with richer actions, for `verify-binary`.
    pub rich: Option<RichActionSpec>,
    /// One type prior per agent, for `multi-agent`.
    pub agents: Option<Vec<TypePrior>>,
}

/// The environment part of a config; reports embed the same shape.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub distribution: StateDistribution,
    pub u: PiecewiseLinear,
    pub v: AgentPayoff,
    #[serde(default = "general")]
    pub alignment: Alignment,
    pub types: TypePrior,
}

fn general() -> Alignment {
    Alignment::General
}

impl EnvSpec {
    pub fn from_env(env: &Environment) -> Self {
        Self {
            distribution: env.states.clone(),
            u: env.payoffs.u.clone(),
            v: env.payoffs.v.clone(),
            alignment: env.payoffs.alignment,
            types: env.types.clone(),
        }
    }

    pub fn build(&self) -> Result<Environment> {
        let types = TypePrior::new(self.types.atoms.clone())?;
        Ok(Environment {
            states: self.distribution.clone(),
            payoffs: PayoffSpec {
                u: self.u.clone(),
                v: self.v.clone(),
                alignment: self.alignment,
            },
            types,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Config {
    pub distribution: StateDistribution,
    pub u: PiecewiseLinear,
    pub v: AgentPayoff,
    #[serde(default = "general")]
    pub alignment: Alignment,
    pub types: TypePrior,
    pub command: Command,
    #[serde(default)]
    pub solver_options: SolverOptions,
}

impl Config {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn env_spec(&self) -> EnvSpec {
        EnvSpec {
            distribution: self.distribution.clone(),
            u: self.u.clone(),
            v: self.v.clone(),
            alignment: self.alignment,
            types: self.types.clone(),
        }
    }

    pub fn environment(&self) -> Result<Environment> {
        let mut env = self.env_spec().build()?;
        if let Some(n) = self.solver_options.grid_n {
            env.states.grid_n = n;
        }
        Ok(env)
    }
}
