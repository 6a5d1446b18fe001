//! Optimal trustworthy binary tests and screening menus.
//!
//! A principal commits to a test of an unknown state, then decides whether to
//! propose a project; a privately informed agent must consent. Everything here
//! works with the truthful reduction: a test is a proposal set `Θ₁`, the agent
//! accepts when his expected payoff on `Θ₁` is nonnegative, and the principal
//! must prefer reporting truthfully.
//!
//! Modules, bottom up:
//!
//! - [`model`]: environments, tests, menus and assumption checks.
//! - [`measure`]: exact integrals and the `(p, μ)` geometry of binary tests.
//! - [`equilibrium`]: acceptance cutoffs, trustworthiness and payoffs.
//! - [`solver_single`]: optimal single tests.
//! - [`solver_menu`]: optimal screening menus for the linear specification.
//! - [`oracle`]: brute-force ground truth.
//! - [`extensions`]: several agents and richer agent actions.

mod cells;
pub mod equilibrium;
mod error;
pub mod extensions;
pub mod measure;
pub mod model;
pub mod oracle;
pub mod presets;
pub mod solver_menu;
pub mod solver_single;

pub use error::{Error, Result};
pub use model::{
    validate_environment, Alignment, AgentPayoff, BinaryTest, Environment, FormTag, GeneralTest,
    MenuEntry, MenuSchedule, PayoffSpec, PiecewiseLinear, StateDistribution, TypePrior, Violation,
};
