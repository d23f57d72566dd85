//! Critical exponent, tilt roots and finiteness classification.
//!
//! For increments taking negative values with positive probability,
//! `R = -log inf_{t >= 0} phi(t)` separates finite from infinite exponential
//! moments: `tau(x)` and `N(x)` have finite moments of order `a` iff `a <= R`,
//! and `rho(x)` iff `a < R`, or `a = R` when the infimum of `phi` sits at the
//! right end of its domain with a strictly negative left derivative. For
//! nonnegative increments all three moments are finite iff
//! `a < -log P{X = 0}`.

use core::fmt;

use alloc::format;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::dist::IncrementSpec;
use crate::error::{Error, Result};
use crate::numeric::roots::{bisect, golden_section};
use crate::tilt::TiltParams;

/// Left derivatives of `phi` smaller than this in absolute value count as a
/// flat (interior) minimum.
pub const FLAT_TOL: f64 = 1e-7;
/// Exponents within this distance of `R` are treated as `a = R`.
pub const CRITICAL_SNAP: f64 = 1e-6;
/// Bracket width of the golden-section search, relative to the search range.
pub const GOLDEN_WIDTH: f64 = 1e-12;
/// A minimizer this close to a finite domain end is read as the endpoint.
pub const ENDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Quantity {
    #[cfg_attr(feature = "serde", serde(rename = "tau"))]
    Tau,
    N,
    #[cfg_attr(feature = "serde", serde(rename = "rho"))]
    Rho,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Tau, Quantity::N, Quantity::Rho];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Tau => "tau",
            Quantity::N => "N",
            Quantity::Rho => "rho",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(Quantity::Tau),
            "N" | "n" => Ok(Quantity::N),
            "rho" => Ok(Quantity::Rho),
            other => Err(Error::Domain(format!("unknown quantity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Verdict {
    Finite,
    Infinite,
}

/// Which branch of the finiteness criterion decided a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Reason {
    /// Nonnegative increments, `a < -log P{X = 0}`.
    NonnegativeBelowThreshold,
    /// Nonnegative increments, `a >= -log P{X = 0}`.
    NonnegativeAboveThreshold,
    /// `inf phi = 1`: no exponent `a > 0` works.
    NoPositiveExponent,
    BelowCritical,
    /// `a = R`, which suffices for `tau` and `N`.
    AtCritical,
    /// `a = R` with the infimum of `phi` at the domain end and `phi' < 0` there.
    AtCriticalBoundary,
    /// `a = R` with a flat interior minimum of `phi`.
    AtCriticalInterior,
    AboveCritical,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::NonnegativeBelowThreshold => "X >= 0 and a < -log P{X=0}",
            Reason::NonnegativeAboveThreshold => "X >= 0 and a >= -log P{X=0}",
            Reason::NoPositiveExponent => "inf phi = 1, so R = 0",
            Reason::BelowCritical => "a < R",
            Reason::AtCritical => "a = R, which suffices for tau and N",
            Reason::AtCriticalBoundary => {
                "a = R with inf phi attained at the domain end, E X exp(-gamma0 X) > 0"
            }
            Reason::AtCriticalInterior => {
                "a = R with an interior minimum of phi, E X exp(-gamma0 X) = 0"
            }
            Reason::AboveCritical => "a > R",
        })
    }
}

/// Symbols governing the criterion: `R`, `gamma0`, boundary flag, domain end.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CriticalData {
    /// `-log inf phi`; `+inf` for increments that are strictly positive.
    pub r: f64,
    /// Minimizer of `phi`; `None` when `R` is `0` or `phi` has no minimizer.
    pub gamma0: Option<f64>,
    pub boundary: bool,
    pub t_max: f64,
    pub phi_prime_at_gamma0: Option<f64>,
    /// `P{X >= 0} = 1`; the other fields then follow the nonnegative criterion.
    pub nonnegative: bool,
    /// `P{X = 0}`.
    pub beta: f64,
}

impl CriticalData {
    pub fn has_positive_exponent(&self) -> bool {
        self.r > 0.0
    }

    /// `|a - R| <= CRITICAL_SNAP`.
    pub fn is_critical(&self, a: f64) -> bool {
        self.r.is_finite() && (a - self.r).abs() <= CRITICAL_SNAP
    }
}

/// Computes `R`, `gamma0` and the boundary flag.
pub fn critical_data(spec: &IncrementSpec) -> Result<CriticalData> {
    let t_max = spec.domain_sup();
    let beta = spec.prob_zero();
    if !spec.has_negative_part() {
        let r = if beta > 0.0 { -beta.ln() } else { f64::INFINITY };
        return Ok(CriticalData {
            r: r.max(0.0),
            gamma0: None,
            boundary: false,
            t_max,
            phi_prime_at_gamma0: None,
            nonnegative: true,
            beta,
        });
    }
    let mean = spec.mean()?;
    if mean <= 0.0 {
        return Ok(CriticalData {
            r: 0.0,
            gamma0: None,
            boundary: false,
            t_max,
            phi_prime_at_gamma0: Some(-mean),
            nonnegative: false,
            beta,
        });
    }

    let phi = |t: f64| spec.laplace(t).map(|v| v.value()).unwrap_or(f64::NAN);
    let dphi = |t: f64| spec.laplace_left_derivative(t).unwrap_or(f64::NAN);
    let hi = search_end(spec)?;
    let t_gold = golden_section(|t| phi(t), 0.0, hi, GOLDEN_WIDTH * hi.max(1.0));

    let (gamma0, boundary, d) = if spec.domain_closed() && t_max - t_gold <= ENDPOINT_TOL {
        let d = dphi(t_max);
        if !d.is_finite() {
            return Err(Error::Domain(format!("phi'({t_max}) is not finite")));
        }
        if d <= 0.0 {
            (t_max, d < -FLAT_TOL, d)
        } else {
            let g = polish(&dphi, t_gold, hi)?;
            (g, false, dphi(g))
        }
    } else {
        let g = polish(&dphi, t_gold, hi)?;
        (g, false, dphi(g))
    };
    let phi_min = phi(gamma0);
    if !(phi_min.is_finite() && phi_min > 0.0) {
        return Err(Error::Domain(format!("phi({gamma0}) = {phi_min} at the minimizer")));
    }
    Ok(CriticalData {
        r: (-phi_min.ln()).max(0.0),
        gamma0: Some(gamma0),
        boundary,
        t_max,
        phi_prime_at_gamma0: Some(d),
        nonnegative: false,
        beta,
    })
}

/// Right end of the minimization bracket: `t_max` when finite, otherwise the
/// first power of two where `phi` is increasing.
fn search_end(spec: &IncrementSpec) -> Result<f64> {
    let t_max = spec.domain_sup();
    if t_max.is_finite() {
        return Ok(t_max);
    }
    let mut t = 1.0;
    for _ in 0..200 {
        if spec.laplace_left_derivative(t)? > 0.0 {
            return Ok(t);
        }
        t *= 2.0;
    }
    Err(Error::Domain("phi has no minimizer on a finite interval".into()))
}

/// Refines the golden-section estimate to a sign change of `phi'`.
fn polish<F: Fn(f64) -> f64>(dphi: &F, guess: f64, hi: f64) -> Result<f64> {
    let upper = if dphi(hi).is_finite() { hi } else { hi * (1.0 - 1e-12) };
    let mut w = 1e-6 * hi.max(1.0);
    loop {
        let lo_t = (guess - w).max(0.0);
        let hi_t = (guess + w).min(upper);
        let (dl, dh) = (dphi(lo_t), dphi(hi_t));
        if dl <= 0.0 && dh >= 0.0 {
            return bisect(|t| dphi(t), lo_t, hi_t)
                .ok_or_else(|| Error::Domain("phi' has no sign change".into()));
        }
        if lo_t == 0.0 && hi_t == upper {
            return Err(Error::Domain(format!(
                "phi' does not change sign on [0, {upper}] (phi'(0) = {dl}, phi'(end) = {dh})"
            )));
        }
        w *= 8.0;
    }
}

/// Minimal `gamma > 0` with `phi(gamma) = exp(-a)`.
pub fn gamma_of(spec: &IncrementSpec, a: f64) -> Result<TiltParams> {
    gamma_of_with(spec, a, &critical_data(spec)?)
}

/// [`gamma_of`] reusing precomputed critical data.
pub fn gamma_of_with(spec: &IncrementSpec, a: f64, cd: &CriticalData) -> Result<TiltParams> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("exponent a = {a} must be finite and > 0")));
    }
    let target = (-a).exp();
    let phi = |t: f64| spec.laplace(t).map(|v| v.value()).unwrap_or(f64::NAN);
    if cd.nonnegative {
        if a >= cd.r {
            return Err(Error::InfiniteMoment {
                quantity: Quantity::Tau,
                a,
                reason: Reason::NonnegativeAboveThreshold,
            });
        }
        let mut hi = 1.0;
        while phi(hi) > target {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Domain(format!("no root of phi = exp(-{a}) below 1e12")));
            }
        }
        let g = bisect(|t| phi(t) - target, 0.0, hi)
            .ok_or_else(|| Error::Domain("bisection failed".into()))?;
        return TiltParams::new(spec, a, g);
    }
    if !cd.has_positive_exponent() {
        return Err(Error::NoPositiveExponent);
    }
    let gamma0 = cd.gamma0.expect("positive R has a minimizer");
    if cd.is_critical(a) {
        return TiltParams::new(spec, cd.r, gamma0);
    }
    if a > cd.r {
        return Err(Error::InfiniteMoment { quantity: Quantity::Tau, a, reason: Reason::AboveCritical });
    }
    let g = bisect(|t| phi(t) - target, 0.0, gamma0)
        .ok_or_else(|| Error::Domain("bisection failed".into()))?;
    TiltParams::new(spec, a, g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FinitenessVerdict {
    pub quantity: Quantity,
    pub verdict: Verdict,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Classification {
    pub a: f64,
    pub verdicts: [FinitenessVerdict; 3],
    pub critical: CriticalData,
}

impl Classification {
    pub fn verdict(&self, q: Quantity) -> &FinitenessVerdict {
        &self.verdicts[q as usize]
    }

    pub fn is_finite(&self, q: Quantity) -> bool {
        self.verdict(q).verdict == Verdict::Finite
    }

    /// `Ok` for a finite verdict, otherwise the refusal carrying its reason.
    pub fn require_finite(&self, q: Quantity) -> Result<()> {
        let v = self.verdict(q);
        match (v.verdict, v.reason) {
            (Verdict::Finite, _) => Ok(()),
            (Verdict::Infinite, Reason::NoPositiveExponent) => Err(Error::NoPositiveExponent),
            (Verdict::Infinite, reason) => Err(Error::InfiniteMoment { quantity: q, a: self.a, reason }),
        }
    }
}

/// Finiteness of the exponential moments of order `a` of `tau`, `N`, `rho`.
pub fn classify(spec: &IncrementSpec, a: f64) -> Result<Classification> {
    classify_with(spec, a, &critical_data(spec)?)
}

pub fn classify_with(_spec: &IncrementSpec, a: f64, cd: &CriticalData) -> Result<Classification> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("exponent a = {a} must be > 0")));
    }
    let all = |verdict, reason| Quantity::ALL.map(|quantity| FinitenessVerdict { quantity, verdict, reason });
    let verdicts = if cd.nonnegative {
        if a < cd.r {
            all(Verdict::Finite, Reason::NonnegativeBelowThreshold)
        } else {
            all(Verdict::Infinite, Reason::NonnegativeAboveThreshold)
        }
    } else if !cd.has_positive_exponent() {
        all(Verdict::Infinite, Reason::NoPositiveExponent)
    } else if cd.is_critical(a) {
        let mut v = all(Verdict::Finite, Reason::AtCritical);
        v[Quantity::Rho as usize] = if cd.boundary {
            FinitenessVerdict { quantity: Quantity::Rho, verdict: Verdict::Finite, reason: Reason::AtCriticalBoundary }
        } else {
            FinitenessVerdict { quantity: Quantity::Rho, verdict: Verdict::Infinite, reason: Reason::AtCriticalInterior }
        };
        v
    } else if a < cd.r {
        all(Verdict::Finite, Reason::BelowCritical)
    } else {
        all(Verdict::Infinite, Reason::AboveCritical)
    };
    Ok(Classification { a, verdicts, critical: *cd })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srw() -> IncrementSpec {
        IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap()
    }

    #[test]
    fn srw_critical_data() {
        let cd = critical_data(&srw()).unwrap();
        assert!((cd.r + 0.8f64.ln()).abs() < 1e-12);
        assert!((cd.gamma0.unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(!cd.boundary);
    }

    #[test]
    fn exp_difference_critical_data() {
        let spec = IncrementSpec::exp_difference(1.0, 2.0).unwrap();
        let cd = critical_data(&spec).unwrap();
        assert!((cd.r - (9.0f64 / 8.0).ln()).abs() < 1e-12);
        assert!((cd.gamma0.unwrap() - 0.5).abs() < 1e-12);
        assert!(!cd.boundary);
        let g = gamma_of(&spec, 0.1).unwrap();
        assert!((g.gamma() - 0.300_856_424_033_551_7).abs() < 1e-10);
    }

    #[test]
    fn negative_drift_has_no_positive_exponent() {
        let spec = IncrementSpec::lattice([(1.0, 0.4), (-1.0, 0.6)]).unwrap();
        let cd = critical_data(&spec).unwrap();
        assert_eq!(cd.r, 0.0);
        assert!(matches!(gamma_of(&spec, 0.1), Err(Error::NoPositiveExponent)));
        let c = classify(&spec, 0.1).unwrap();
        assert!(Quantity::ALL.iter().all(|&q| !c.is_finite(q)));
    }

    #[test]
    fn srw_truth_table() {
        let spec = srw();
        let r = -(0.8f64.ln());
        let c = classify(&spec, r).unwrap();
        assert!(c.is_finite(Quantity::Tau) && c.is_finite(Quantity::N) && !c.is_finite(Quantity::Rho));
        // The rounded value a user would type still lands on the critical case.
        let c = classify(&spec, 0.223144).unwrap();
        assert_eq!(c.verdict(Quantity::Rho).reason, Reason::AtCriticalInterior);
        let g = gamma_of(&spec, r).unwrap();
        assert!((g.gamma() - 2f64.ln()).abs() < 1e-12);
        assert!(matches!(gamma_of(&spec, 0.3), Err(Error::InfiniteMoment { .. })));
    }

    #[test]
    fn point_mass_gamma_equals_a() {
        let spec = IncrementSpec::lattice([(1.0, 1.0)]).unwrap();
        let g = gamma_of(&spec, 0.37).unwrap();
        assert!((g.gamma() - 0.37).abs() < 1e-12);
        let c = classify(&spec, 5.0).unwrap();
        assert!(c.is_finite(Quantity::Rho));
    }

    #[test]
    fn bernoulli_threshold() {
        let spec = IncrementSpec::lattice([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let g = gamma_of(&spec, 0.3).unwrap();
        assert!((g.gamma() - 0.730_565_720_567_268_7).abs() < 1e-10);
        assert!(classify(&spec, 0.69).unwrap().is_finite(Quantity::Tau));
        assert!(!classify(&spec, 0.7).unwrap().is_finite(Quantity::Tau));
    }
}
