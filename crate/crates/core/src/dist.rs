//! Increment laws: Laplace transforms, lattice structure and sampling.
//!
//! Three families are supported:
//!
//! * [`LatticePmf`]: a finite pmf. Its transform and derivative are finite sums.
//! * [`ExpDifference`]: `Y1 - Y2` with `Y1 ~ Exp(alpha)`, `Y2 ~ Exp(kappa)`,
//!   transform `alpha kappa / ((alpha + t)(kappa - t))` for `t < kappa`.
//! * [`ShiftedHeavyExp`]: `s + Y` where `Y` has density proportional to
//!   `exp(-h|y|) / (1 + |y|^r)`, optionally reweighted by `exp(-theta y)`
//!   (the family is closed under exponential tilting this way). Its
//!   transform is finite up to and including the right endpoint of its
//!   domain, which is what produces a minimum of the transform at the
//!   boundary.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::numeric::quad::damped_power_moment;
use crate::numeric::rational::{fraction_gcd, MAX_DENOMINATOR};

/// Relative tolerance of every quadrature-based transform evaluation.
pub const LAPLACE_REL_TOL: f64 = 1e-10;
/// Relative tolerance of the cached normalization masses.
pub const NORMALIZATION_REL_TOL: f64 = 1e-12;
const PROB_SUM_TOL: f64 = 1e-12;
const FRACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum LatticeStructure {
    NonLattice,
    /// Support contained in `span * Z`, `span` maximal.
    Lattice { span: f64 },
    /// Support contained in `offset + span * Z` with `offset` not in `span * Z`.
    OffsetLattice { span: f64, offset: f64 },
}

impl LatticeStructure {
    pub fn span(&self) -> Option<f64> {
        match *self {
            LatticeStructure::Lattice { span } => Some(span),
            _ => None,
        }
    }
}

/// Value of a Laplace transform on the extended nonnegative reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplaceValue {
    Finite(f64),
    Infinite,
}

impl LaplaceValue {
    /// The value as an `f64`, with `+inf` for [`LaplaceValue::Infinite`].
    pub fn value(self) -> f64 {
        match self {
            LaplaceValue::Finite(v) => v,
            LaplaceValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LaplaceValue::Finite(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    atoms: Vec<Atom>,
    structure: LatticeStructure,
}

impl LatticePmf {
    pub fn new<I: IntoIterator<Item = (f64, f64)>>(atoms: I) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(value, prob)| Atom { value, prob })
            .collect();
        if atoms.is_empty() {
            return Err(Error::InvalidSpec("lattice pmf needs at least one atom".into()));
        }
        for a in &atoms {
            if !a.value.is_finite() {
                return Err(Error::InvalidSpec(format!("atom value {} is not finite", a.value)));
            }
            if !(a.prob > 0.0 && a.prob <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "atom probability {} is outside (0, 1]",
                    a.prob
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSpec(format!(
                "probabilities sum to {total}, not 1 within {PROB_SUM_TOL:e}"
            )));
        }
        atoms.sort_by(|a, b| a.value.total_cmp(&b.value));
        if atoms.windows(2).any(|w| w[0].value == w[1].value) {
            return Err(Error::InvalidSpec("atom values must be pairwise distinct".into()));
        }
        let structure = detect_lattice(&atoms)?;
        Ok(Self { atoms, structure })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new([(value, 1.0)])
    }

    /// Atoms sorted by value.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn structure(&self) -> LatticeStructure {
        self.structure
    }

    /// Atoms expressed as integer multiples of the span, for `Lattice` laws.
    pub fn lattice_units(&self) -> Option<(f64, Vec<(i64, f64)>)> {
        let span = self.structure.span()?;
        let units = self
            .atoms
            .iter()
            .map(|a| ((a.value / span).round() as i64, a.prob))
            .collect();
        Some((span, units))
    }
}

fn detect_lattice(atoms: &[Atom]) -> Result<LatticeStructure> {
    let values: Vec<f64> = atoms.iter().map(|a| a.value).collect();
    if values.iter().all(|&v| v == 0.0) {
        // X = 0 a.s.: every span works; report the unit lattice.
        return Ok(LatticeStructure::Lattice { span: 1.0 });
    }
    if let Some(span) = fraction_gcd(&values, MAX_DENOMINATOR, FRACTION_TOL) {
        return Ok(LatticeStructure::Lattice { span });
    }
    if values.len() == 1 {
        return Ok(LatticeStructure::Lattice { span: values[0].abs() });
    }
    let diffs: Vec<f64> = values.iter().map(|v| v - values[0]).collect();
    match fraction_gcd(&diffs, MAX_DENOMINATOR, FRACTION_TOL) {
        Some(span) => {
            let offset = values[0] - span * (values[0] / span).floor();
            Ok(LatticeStructure::OffsetLattice { span, offset })
        }
        None => Err(Error::InvalidSpec(format!(
            "atom spacings are not rational with denominators <= {MAX_DENOMINATOR}; \
             lattice span cannot be determined"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpDifference {
    alpha: f64,
    kappa: f64,
}

impl ExpDifference {
    pub fn new(alpha: f64, kappa: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("kappa", kappa)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} = {v} must be a finite rate > 0")));
            }
        }
        Ok(Self { alpha, kappa })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// `s + Y`, `Y` with density `exp(-theta y) exp(-h|y|) / (1 + |y|^r)` up to
/// normalization; `theta` is zero for the untilted law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedHeavyExp {
    h: f64,
    r: f64,
    s: f64,
    tilt: f64,
    pos_mass: f64,
    neg_mass: f64,
}

impl ShiftedHeavyExp {
    pub fn new(h: f64, r: f64, s: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidSpec(format!("decay rate h = {h} must be finite and > 0")));
        }
        if !(r > 2.0 && r.is_finite()) {
            return Err(Error::InvalidSpec(format!("tail power r = {r} must be finite and > 2")));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidSpec(format!("shift s = {s} must be finite and >= 0")));
        }
        Self::with_tilt(h, r, s, 0.0)
    }

    fn with_tilt(h: f64, r: f64, s: f64, tilt: f64) -> Result<Self> {
        let pos_mass = damped_power_moment(0, h + tilt, r, NORMALIZATION_REL_TOL)?;
        let neg_mass = damped_power_moment(0, (h - tilt).max(0.0), r, NORMALIZATION_REL_TOL)?;
        Ok(Self { h, r, s, tilt, pos_mass, neg_mass })
    }

    /// The same law reweighted by `exp(-gamma x)` and renormalized.
    pub fn tilted(&self, gamma: f64) -> Result<Self> {
        let tilt = self.tilt + gamma;
        if !(gamma >= 0.0) || tilt > self.h * (1.0 + 1e-12) {
            return Err(Error::InconsistentTilt(format!(
                "tilt {tilt} leaves the domain [0, {}] of the transform",
                self.h
            )));
        }
        Self::with_tilt(self.h, self.r, self.s, tilt.min(self.h))
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    /// Normalizing constant of the density of `Y`.
    pub fn normalization(&self) -> f64 {
        1.0 / (self.pos_mass + self.neg_mass)
    }

    fn domain_sup(&self) -> f64 {
        self.h - self.tilt
    }

    fn neg_decay(&self, t: f64) -> f64 {
        (self.h - self.tilt - t).max(0.0)
    }

    fn laplace(&self, t: f64) -> Result<LaplaceValue> {
        if t > self.domain_sup() {
            return Ok(LaplaceValue::Infinite);
        }
        let pos = damped_power_moment(0, self.h + self.tilt + t, self.r, LAPLACE_REL_TOL)?;
        let neg = damped_power_moment(0, self.neg_decay(t), self.r, LAPLACE_REL_TOL)?;
        Ok(LaplaceValue::Finite(
            (-self.s * t).exp() * (pos + neg) * self.normalization(),
        ))
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        let phi = self.laplace(t)?.value();
        let pos = damped_power_moment(1, self.h + self.tilt + t, self.r, LAPLACE_REL_TOL)?;
        let neg = damped_power_moment(1, self.neg_decay(t), self.r, LAPLACE_REL_TOL)?;
        Ok(-self.s * phi + (-self.s * t).exp() * (neg - pos) * self.normalization())
    }
}

/// The law of one increment `X`.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementSpec {
    LatticePmf(LatticePmf),
    ExpDifference(ExpDifference),
    ShiftedHeavyExp(ShiftedHeavyExp),
}

impl From<LatticePmf> for IncrementSpec {
    fn from(v: LatticePmf) -> Self {
        IncrementSpec::LatticePmf(v)
    }
}
impl From<ExpDifference> for IncrementSpec {
    fn from(v: ExpDifference) -> Self {
        IncrementSpec::ExpDifference(v)
    }
}
impl From<ShiftedHeavyExp> for IncrementSpec {
    fn from(v: ShiftedHeavyExp) -> Self {
        IncrementSpec::ShiftedHeavyExp(v)
    }
}

impl IncrementSpec {
    pub fn lattice<I: IntoIterator<Item = (f64, f64)>>(atoms: I) -> Result<Self> {
        LatticePmf::new(atoms).map(Self::from)
    }

    pub fn exp_difference(alpha: f64, kappa: f64) -> Result<Self> {
        ExpDifference::new(alpha, kappa).map(Self::from)
    }

    pub fn shifted_heavy_exp(h: f64, r: f64, s: f64) -> Result<Self> {
        ShiftedHeavyExp::new(h, r, s).map(Self::from)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            IncrementSpec::LatticePmf(_) => "lattice_pmf",
            IncrementSpec::ExpDifference(_) => "exp_difference",
            IncrementSpec::ShiftedHeavyExp(_) => "shifted_heavy_exp",
        }
    }

    /// `phi(t) = E exp(-tX)` for `t >= 0`.
    pub fn laplace(&self, t: f64) -> Result<LaplaceValue> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("Laplace argument t = {t} must be >= 0")));
        }
        match self {
            IncrementSpec::LatticePmf(l) => Ok(LaplaceValue::Finite(
                l.atoms.iter().map(|a| a.prob * (-t * a.value).exp()).sum(),
            )),
            IncrementSpec::ExpDifference(e) => {
                if t >= e.kappa {
                    Ok(LaplaceValue::Infinite)
                } else {
                    Ok(LaplaceValue::Finite(
                        e.alpha * e.kappa / ((e.alpha + t) * (e.kappa - t)),
                    ))
                }
            }
            IncrementSpec::ShiftedHeavyExp(s) => s.laplace(t),
        }
    }

    /// Left derivative `phi'(t) = -E X exp(-tX)`. At `t = 0` this is the
    /// right derivative `-E X`; at a finite right end of the domain it is the
    /// one-sided derivative, which is finite for the heavy family.
    pub fn laplace_left_derivative(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t > self.domain_sup() {
            return Err(Error::Domain(format!(
                "t = {t} outside the domain [0, {}] of the transform",
                self.domain_sup()
            )));
        }
        match self {
            IncrementSpec::LatticePmf(l) => Ok(-l
                .atoms
                .iter()
                .map(|a| a.value * a.prob * (-t * a.value).exp())
                .sum::<f64>()),
            IncrementSpec::ExpDifference(e) => {
                if t >= e.kappa {
                    return Err(Error::Domain(format!(
                        "transform is infinite at t = {t} >= kappa = {}",
                        e.kappa
                    )));
                }
                let (u, v) = (e.alpha + t, e.kappa - t);
                Ok(e.alpha * e.kappa * (2.0 * t + e.alpha - e.kappa) / (u * u * v * v))
            }
            IncrementSpec::ShiftedHeavyExp(s) => s.derivative(t),
        }
    }

    /// Supremum of `{t >= 0 : phi(t) < inf}`.
    pub fn domain_sup(&self) -> f64 {
        match self {
            IncrementSpec::LatticePmf(_) => f64::INFINITY,
            IncrementSpec::ExpDifference(e) => e.kappa,
            IncrementSpec::ShiftedHeavyExp(s) => s.domain_sup(),
        }
    }

    /// Whether `phi` is finite at [`domain_sup`](Self::domain_sup) itself.
    pub fn domain_closed(&self) -> bool {
        matches!(self, IncrementSpec::ShiftedHeavyExp(_))
    }

    pub fn lattice_structure(&self) -> LatticeStructure {
        match self {
            IncrementSpec::LatticePmf(l) => l.structure,
            _ => LatticeStructure::NonLattice,
        }
    }

    /// `P{X < 0} > 0`.
    pub fn has_negative_part(&self) -> bool {
        match self {
            IncrementSpec::LatticePmf(l) => l.atoms[0].value < 0.0,
            _ => true,
        }
    }

    /// `P{X = 0}`.
    pub fn prob_zero(&self) -> f64 {
        match self {
            IncrementSpec::LatticePmf(l) => l
                .atoms
                .iter()
                .find(|a| a.value == 0.0)
                .map_or(0.0, |a| a.prob),
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(-self.laplace_left_derivative(0.0)?)
    }

    /// Largest value in the support, `+inf` for unbounded laws.
    pub fn support_max(&self) -> f64 {
        match self {
            IncrementSpec::LatticePmf(l) => l.atoms[l.atoms.len() - 1].value,
            _ => f64::INFINITY,
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        Sampler::new(self)
    }

    /// `n` i.i.d. draws from the law of `X`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        let sampler = self.sampler()?;
        Ok((0..n).map(|_| sampler.sample(rng)).collect())
    }
}

#[derive(Debug, Clone)]
enum Envelope {
    Exponential(Exp<f64>),
    /// `2 / (1 + y^2)` on `y >= 0`, which dominates `1 / (1 + y^r)` for `r > 2`.
    HalfCauchy,
}

#[derive(Debug, Clone)]
struct HalfLine {
    decay: f64,
    r: f64,
    envelope: Envelope,
    acceptance: f64,
}

impl HalfLine {
    fn new(decay: f64, r: f64, mass: f64) -> Result<Self> {
        let exp_mass = if decay > 0.0 { 1.0 / decay } else { f64::INFINITY };
        let cauchy_mass = core::f64::consts::PI;
        let (envelope, env_mass) = if exp_mass < cauchy_mass {
            let exp = Exp::new(decay)
                .map_err(|e| Error::InvalidSpec(format!("exponential envelope: {e}")))?;
            (Envelope::Exponential(exp), exp_mass)
        } else {
            (Envelope::HalfCauchy, cauchy_mass)
        };
        let acceptance = mass / env_mass;
        if !(acceptance > 0.0 && acceptance <= 1.0 + 1e-9) {
            return Err(Error::InvalidSpec(format!(
                "rejection envelope degenerate (acceptance {acceptance})"
            )));
        }
        Ok(Self { decay, r, envelope, acceptance })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            match &self.envelope {
                Envelope::Exponential(exp) => {
                    let y = exp.sample(rng);
                    if u * (1.0 + y.powf(self.r)) <= 1.0 {
                        return y;
                    }
                }
                Envelope::HalfCauchy => {
                    let v: f64 = rng.random();
                    let y = (0.5 * core::f64::consts::PI * v).tan();
                    let ratio = (-self.decay * y).exp() * (1.0 + y * y) / (2.0 * (1.0 + y.powf(self.r)));
                    if u <= ratio {
                        return y;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Lattice { values: Vec<f64>, index: WeightedAliasIndex<f64> },
    ExpDifference { up: Exp<f64>, down: Exp<f64> },
    Heavy { shift: f64, p_pos: f64, pos: HalfLine, neg: HalfLine },
}

/// Prepared sampler for one [`IncrementSpec`]; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Sampler {
    kind: SamplerKind,
}

impl Sampler {
    pub fn new(spec: &IncrementSpec) -> Result<Self> {
        let kind = match spec {
            IncrementSpec::LatticePmf(l) => {
                let index = WeightedAliasIndex::new(l.atoms.iter().map(|a| a.prob).collect())
                    .map_err(|e| Error::InvalidSpec(format!("alias table: {e}")))?;
                SamplerKind::Lattice { values: l.atoms.iter().map(|a| a.value).collect(), index }
            }
            IncrementSpec::ExpDifference(e) => SamplerKind::ExpDifference {
                up: Exp::new(e.alpha).map_err(|e| Error::InvalidSpec(format!("{e}")))?,
                down: Exp::new(e.kappa).map_err(|e| Error::InvalidSpec(format!("{e}")))?,
            },
            IncrementSpec::ShiftedHeavyExp(s) => SamplerKind::Heavy {
                shift: s.s,
                p_pos: s.pos_mass / (s.pos_mass + s.neg_mass),
                pos: HalfLine::new(s.h + s.tilt, s.r, s.pos_mass)?,
                neg: HalfLine::new((s.h - s.tilt).max(0.0), s.r, s.neg_mass)?,
            },
        };
        Ok(Self { kind })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Lattice { values, index } => values[index.sample(rng)],
            SamplerKind::ExpDifference { up, down } => up.sample(rng) - down.sample(rng),
            SamplerKind::Heavy { shift, p_pos, pos, neg } => {
                let side: f64 = rng.random();
                if side < *p_pos {
                    shift + pos.sample(rng)
                } else {
                    shift - neg.sample(rng)
                }
            }
        }
    }

    /// Expected fraction of accepted proposals for rejection-sampled laws.
    pub fn acceptance_rate(&self) -> Option<f64> {
        match &self.kind {
            SamplerKind::Heavy { p_pos, pos, neg, .. } => {
                Some(1.0 / (p_pos / pos.acceptance + (1.0 - p_pos) / neg.acceptance))
            }
            _ => None,
        }
    }
}
