//! Exponential moments of first passage times, visit counts and last exit
//! times of real-valued random walks.
//!
//! For a zero-delayed walk `S_n = X_1 + ... + X_n` with i.i.d. increments the
//! crate decides when `E exp(a tau(x))`, `E exp(a N(x))` and
//! `E exp(a rho(x))` are finite, computes the growth rate `gamma(a)` of these
//! moments in `x`, and the prefactor constants in front of `exp(gamma x)`.
//! Everything is checked three ways: exact lattice series, closed-form
//! reference walks, and Monte Carlo (plain and exponentially tilted).
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! front end and the multi-threaded path executor live in the `fpt` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analyze;
pub mod asym;
pub mod dist;
pub mod error;
pub mod exact;
pub mod numeric;
pub mod oracle;
pub mod tilt;
pub mod walk;

pub use analyze::{
    classify, critical_data, gamma_of, Classification, CriticalData, FinitenessVerdict, Quantity,
    Reason, Verdict,
};
pub use dist::{IncrementSpec, LaplaceValue, LatticeStructure};
pub use error::{Error, Result};
pub use tilt::{tilt_spec, tilted_mean, TiltParams};
pub use walk::{McConfig, McEstimate};
