use alloc::string::String;

use crate::analyze::{Quantity, Reason};

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The increment law violates one of its invariants.
    #[error("invalid increment law: {0}")]
    InvalidSpec(String),

    /// A numeric argument is outside the domain of the operation.
    #[error("argument out of range: {0}")]
    Domain(String),

    #[error("quadrature did not reach the requested tolerance (achieved relative error {achieved:e})")]
    Quadrature { achieved: f64 },

    /// The requested exponential moment is infinite; carries the branch of the
    /// finiteness criterion that fired.
    #[error("E exp(a {quantity}) is infinite at a = {a}: {reason}")]
    InfiniteMoment { quantity: Quantity, a: f64, reason: Reason },

    /// `inf_t E exp(-tX) = 1`, so no exponential moment of order `a > 0` exists.
    #[error("no positive exponent exists: inf of the Laplace transform is 1 (E X <= 0)")]
    NoPositiveExponent,

    #[error("inconsistent tilt parameters: {0}")]
    InconsistentTilt(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("simulation aborted: {0}")]
    Simulation(String),

    #[error("asymptotic constant: {0}")]
    Refinement(String),
}

impl Error {
    /// True for refusals caused by a mathematically infinite moment, as
    /// opposed to bad input or numerical failure.
    pub fn is_infinite_refusal(&self) -> bool {
        matches!(self, Error::InfiniteMoment { .. } | Error::NoPositiveExponent)
    }
}
