//! Exponential change of measure.
//!
//! Under `P_gamma` the increment law is reweighted by `exp(a - gamma x)`, where
//! `phi(gamma) = exp(-a)` makes the weights integrate to one. The lattice and
//! exponential-difference families are closed under this operation; the heavy
//! family carries its accumulated tilt internally.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::analyze::FLAT_TOL;
use crate::dist::{IncrementSpec, LatticePmf};
use crate::error::{Error, Result};

/// Normalization witnesses above this are rejected as stale parameters.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TiltParams {
    a: f64,
    gamma: f64,
    witness: f64,
}

impl TiltParams {
    /// Pairs `(a, gamma)` and records `|exp(a) phi(gamma) - 1|`.
    pub fn new(spec: &IncrementSpec, a: f64, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !a.is_finite() {
            return Err(Error::InconsistentTilt(format!("a = {a}, gamma = {gamma}")));
        }
        let phi = spec.laplace(gamma)?.value();
        let witness = (a.exp() * phi - 1.0).abs();
        Ok(Self { a, gamma, witness })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `|exp(a) phi(gamma) - 1|`.
    pub fn witness(&self) -> f64 {
        self.witness
    }

    pub fn is_consistent(&self) -> bool {
        self.witness < WITNESS_TOL
    }

    fn check(&self) -> Result<()> {
        if self.is_consistent() {
            Ok(())
        } else {
            Err(Error::InconsistentTilt(format!(
                "exp(a) phi(gamma) deviates from 1 by {:e} (a = {}, gamma = {})",
                self.witness, self.a, self.gamma
            )))
        }
    }
}

/// Law of `X` under `P_gamma`.
pub fn tilt_spec(spec: &IncrementSpec, params: &TiltParams) -> Result<IncrementSpec> {
    params.check()?;
    tilt_unchecked(spec, params.gamma)
}

/// Reweights by `exp(-theta x)` and renormalizes; no consistency requirement.
pub(crate) fn tilt_unchecked(spec: &IncrementSpec, theta: f64) -> Result<IncrementSpec> {
    match spec {
        IncrementSpec::LatticePmf(l) => {
            let weights: Vec<(f64, f64)> = l
                .atoms()
                .iter()
                .map(|at| (at.value, at.prob * (-theta * at.value).exp()))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            let total: f64 = weights.iter().map(|w| w.1).sum();
            if !(total.is_finite() && total > 0.0) {
                return Err(Error::InconsistentTilt(format!(
                    "tilted weights do not normalize at theta = {theta}"
                )));
            }
            LatticePmf::new(weights.into_iter().map(|(v, w)| (v, w / total))).map(Into::into)
        }
        IncrementSpec::ExpDifference(e) => {
            if theta >= e.kappa() {
                return Err(Error::InconsistentTilt(format!(
                    "gamma = {theta} >= kappa = {} leaves the domain of the transform",
                    e.kappa()
                )));
            }
            IncrementSpec::exp_difference(e.alpha() + theta, e.kappa() - theta)
        }
        IncrementSpec::ShiftedHeavyExp(s) => s.tilted(theta).map(Into::into),
    }
}

/// `E_gamma X = -exp(a) phi'(gamma)`. Rounding noise below the flatness
/// tolerance is reported as zero; anything more negative means `gamma` lies
/// past the minimizer of `phi`.
pub fn tilted_mean(spec: &IncrementSpec, params: &TiltParams) -> Result<f64> {
    params.check()?;
    let m = -params.a.exp() * spec.laplace_left_derivative(params.gamma)?;
    if m < -FLAT_TOL {
        return Err(Error::InconsistentTilt(format!(
            "tilted mean {m} is negative; gamma = {} is not the minimal root",
            params.gamma
        )));
    }
    Ok(m.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::LatticeStructure;

    #[test]
    fn srw_boundary_tilt_is_symmetric() {
        let spec = IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap();
        let p = TiltParams::new(&spec, -(0.8f64.ln()), 2f64.ln()).unwrap();
        assert!(p.witness() < 1e-15);
        let IncrementSpec::LatticePmf(t) = tilt_spec(&spec, &p).unwrap() else {
            panic!("family changed")
        };
        for at in t.atoms() {
            assert!((at.prob - 0.5).abs() < 1e-15);
        }
        assert_eq!(t.structure(), LatticeStructure::Lattice { span: 1.0 });
        assert!(tilted_mean(&spec, &p).unwrap().abs() < 1e-9);
    }

    #[test]
    fn exp_difference_tilt_stays_in_family() {
        let spec = IncrementSpec::exp_difference(1.0, 2.0).unwrap();
        let p = TiltParams::new(&spec, (9.0f64 / 8.0).ln(), 0.5).unwrap();
        let t = tilt_spec(&spec, &p).unwrap();
        assert_eq!(t, IncrementSpec::exp_difference(1.5, 1.5).unwrap());
    }

    #[test]
    fn stale_parameters_are_refused() {
        let spec = IncrementSpec::exp_difference(1.0, 2.0).unwrap();
        let p = TiltParams::new(&spec, 0.1, 0.2).unwrap();
        assert!(matches!(tilt_spec(&spec, &p), Err(Error::InconsistentTilt(_))));
    }

    #[test]
    fn point_mass_tilt_keeps_the_law() {
        let spec = IncrementSpec::lattice([(1.0, 1.0)]).unwrap();
        let p = TiltParams::new(&spec, 0.4, 0.4).unwrap();
        assert_eq!(tilt_spec(&spec, &p).unwrap(), spec);
        assert!((tilted_mean(&spec, &p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn past_the_minimizer_is_inconsistent() {
        let spec = IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap();
        // phi(log 4) = 1 = phi(0): the non-minimal root of exp(-a) at a = 0+.
        let g = 4f64.ln();
        let a = -spec.laplace(g).unwrap().value().ln();
        let p = TiltParams::new(&spec, a, g).unwrap();
        assert!(tilted_mean(&spec, &p).is_err());
    }
}
