use thiserror::Error;

use crate::tensor::AxisTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Runtime failures of the numeric engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("tag mismatch at axis pair ({left_axis}, {right_axis}): {left} cannot pair with {right}")]
    TagMismatch { left_axis: usize, right_axis: usize, left: AxisTag, right: AxisTag },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("matrix is singular or too badly conditioned (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },
    #[error("point {point:?} lies outside the chart of {manifold}")]
    OutOfChart { manifold: String, point: Vec<f64> },
    #[error("geodesic left the chart of {manifold} at time {time}")]
    ChartExit { manifold: String, time: f64 },
    #[error("the domain must be an interval")]
    DomainNotInterval,
    #[error("lagrangian depends on the material point (|L_mu| = {magnitude:e})")]
    NonAutonomousLagrangian { magnitude: f64 },
    #[error("configuration is not critical (max Euler-Lagrange residual {residual:e})")]
    NotCritical { residual: f64 },
    #[error("variation does not respect the boundary mode (|A| = {magnitude:e} on the boundary)")]
    NotAdmissible { magnitude: f64 },
    #[error("flow diverged at step {step}: tension grew from {initial:e} to {current:e}")]
    Divergence { step: usize, initial: f64, current: f64 },
    #[error("lagrangian {0} provides no exact second partials")]
    MissingSecondPartials(String),
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("shooting did not converge (residual {residual:e})")]
    ShootingFailed { residual: f64 },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
