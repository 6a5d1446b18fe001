//! Ready-made environments for the worked examples.

use crate::model::{
    linear_environment, AgentPayoff, Alignment, Environment, PayoffSpec, PiecewiseLinear,
    StateDistribution, TypePrior,
};
use crate::Result;

/// Single-type environment on uniform `[-1, 1]` with step payoffs.
///
/// The principal gets `1 + 2ε` on `θ ≥ 0` and `-1` below; the agent gets
/// `-1 - ε` on `θ ≥ 0` and `1` below. With `reduced`, the principal's payoff
/// on `(1/2, 1]` drops to `1 - 2ε`.
pub fn fig1(epsilon: f64, reduced: bool) -> Result<Environment> {
    let u = if reduced {
        PiecewiseLinear::steps(
            vec![-1.0, 0.0, 0.5, 1.0],
            vec![-1.0, 1.0 + 2.0 * epsilon, 1.0 - 2.0 * epsilon],
        )?
    } else {
        PiecewiseLinear::steps(vec![-1.0, 0.0, 1.0], vec![-1.0, 1.0 + 2.0 * epsilon])?
    };
    let base = PiecewiseLinear::steps(vec![-1.0, 0.0, 1.0], vec![1.0, -1.0 - epsilon])?;
    Ok(Environment {
        states: StateDistribution::uniform(-1.0, 1.0),
        payoffs: PayoffSpec {
            u,
            v: AgentPayoff::shifted(base),
            alignment: Alignment::General,
        },
        types: TypePrior::degenerate(0.0),
    })
}

/// Linear two-type environment: uniform `[-1, 1]`, `λ ∈ {1/3, 2/3}` with
/// probabilities `ε` and `1 - ε`.
pub fn menu51(epsilon: f64) -> Result<Environment> {
    Ok(linear_environment(
        StateDistribution::uniform(-1.0, 1.0),
        TypePrior::new(vec![(1.0 / 3.0, epsilon), (2.0 / 3.0, 1.0 - epsilon)])?,
    ))
}

/// Linear three-type environment on uniform `[-1/3, 2/3]`.
pub fn menu_b(delta: f64, epsilon: f64) -> Result<Environment> {
    Ok(linear_environment(
        StateDistribution::uniform(-1.0 / 3.0, 2.0 / 3.0),
        TypePrior::new(vec![
            (7.0 / 24.0, (95.0 / 243.0 - delta) * epsilon),
            (0.5, (148.0 / 243.0 + delta) * epsilon),
            (2.0 / 3.0, 1.0 - epsilon),
        ])?,
    ))
}
