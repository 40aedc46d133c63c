//! Black-box reward interface.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("action outside the feasible box: {0}")]
    Bounds(String),
    #[error("model error: {0}")]
    Model(String),
}

/// A reward the optimizer can only query, never differentiate.
pub trait RewardModel: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError>;

    /// Constraint violation of `x`; zero for unconstrained problems.
    fn violation(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

impl<F> RewardModel for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        Ok(self(x))
    }
}

impl<R: RewardModel + ?Sized> RewardModel for std::sync::Arc<R> {
    fn evaluate(&self, x: &[f64]) -> Result<f64, RewardError> {
        (**self).evaluate(x)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        (**self).violation(x)
    }
}
