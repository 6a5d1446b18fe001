use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("set escapes support")]
    SetEscapesSupport,

    #[error("infeasible posterior mean {mu} (feasible range [{lo}, {hi}])")]
    InfeasibleMean { mu: f64, lo: f64, hi: f64 },

    #[error("pair not inducible: p = {p} exceeds {max_p} at mean {mu}")]
    NotInducible { p: f64, mu: f64, max_p: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("no proposal signal")]
    NoProposal,

    #[error("solver/alignment mismatch: {solver} needs {expected}, environment is {found}")]
    AlignmentMismatch {
        solver: &'static str,
        expected: &'static str,
        found: String,
    },

    #[error("optimal {form} test [{a}, {b}] breaks the sign pattern around zero")]
    ShapeViolation {
        form: &'static str,
        a: f64,
        b: f64,
    },

    #[error("{cells} cells exceed the brute-force limit of {limit}")]
    TooManyCells { cells: usize, limit: usize },

    #[error("{0} requires u(θ) = θ and v(θ, λ) = λ - θ")]
    NotLinear(&'static str),

    #[error("environment fails validation: {}", join(.0))]
    Validation(Vec<Violation>),

    #[error("linear program failed: {0}")]
    Lp(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
