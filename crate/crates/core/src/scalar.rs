//! Scalar abstraction for the analysis code.
//!
//! Transition matrices, distributions and rate statistics are written once
//! against [`Scalar`] and instantiated for `f64` (the default used everywhere
//! through the aliases in the crate root) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable by the Markov and softmax machinery.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static {
    /// Tolerance used when checking that a probability column sums to one.
    const STOCHASTIC_TOL: f64;

    /// Lossy conversion from `f64`; panics only for values that cannot be
    /// represented at all, which never happens for the finite inputs used here.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const STOCHASTIC_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const STOCHASTIC_TOL: f64 = 1e-5;
}
