//! Exact computations for lattice walks.
//!
//! All series are evaluated by dynamic programming on the lattice `span * Z`,
//! under an exponentially tilted law `p_theta(k) = p(k) exp(-theta span k) /
//! phi(theta)` with `theta = gamma(min(a, R))`. The terms then read
//! `exp(delta n) * sum_k exp(theta span k) P_theta{S_n = k, ...}` with
//! `delta = a + log phi(theta)`, which is zero for `a <= R`. Under the tilt the
//! bulk of the mass drifts up or stays centred, so the window is trimmed at
//! both ends where cells carry less than [`TRIM_MASS`]; trimmed mass is
//! reported, never silently dropped.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::analyze::{critical_data, gamma_of_with, CriticalData};
use crate::dist::{IncrementSpec, LatticePmf, LatticeStructure};
use crate::error::{Error, Result};
use crate::numeric::banded::BandedMatrix;
use crate::numeric::stats::loglog_fit;
use crate::walk::lundberg_barrier;

/// Cells of the tilted distribution below this mass are dropped.
pub const TRIM_MASS: f64 = 1e-30;
/// Heuristic divergence: partial sums beyond this multiple of the first
/// term (scaled by `exp(gamma0 x)`).
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Barrier accuracy for the survival function of the overall minimum.
const SURVIVAL_EPSILON: f64 = 1e-14;
const FIRST_CHECKPOINT: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum TailKind {
    /// Geometric Chernoff bound on the remaining terms.
    Certified,
    /// Power-law extrapolation of the last decade of terms.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SeriesResult {
    pub value: f64,
    pub n_terms: u64,
    /// Certified: bound on the omitted tail. Heuristic: the extrapolated tail
    /// already included in `value`.
    pub tail_bound: f64,
    pub tail_kind: TailKind,
    pub diverged: bool,
    /// Log-log slope of the terms over the last checked decade.
    pub fitted_exponent: Option<f64>,
    /// Probability mass dropped by window trimming, before reweighting.
    pub truncated_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SeriesOptions {
    pub rel_tol: f64,
    pub max_terms: u64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_terms: 100_000 }
    }
}

/// Law of `S_n` restricted to a window, with the mass outside it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PmfTable {
    pub span: f64,
    /// Lattice index of `probs[0]`.
    pub lo: i64,
    pub probs: Vec<f64>,
    pub below: f64,
    pub above: f64,
}

impl PmfTable {
    /// `P{S_n = value}` inside the window, `0` elsewhere.
    pub fn prob(&self, value: f64) -> f64 {
        let k = (value / self.span).round() as i64 - self.lo;
        if k < 0 {
            return 0.0;
        }
        self.probs.get(k as usize).copied().unwrap_or(0.0)
    }

    /// `(value, probability)` for every cell of the window.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| ((self.lo + i as i64) as f64 * self.span, p))
    }
}

fn lattice_of(spec: &IncrementSpec) -> Result<(&LatticePmf, f64, Vec<(i64, f64)>)> {
    let IncrementSpec::LatticePmf(pmf) = spec else {
        return Err(Error::Unsupported(format!(
            "exact series need a lattice law, got {}",
            spec.family_name()
        )));
    };
    match pmf.structure() {
        LatticeStructure::Lattice { .. } => {
            let (span, units) = pmf.lattice_units().expect("lattice structure has a span");
            Ok((pmf, span, units))
        }
        other => Err(Error::Unsupported(format!("exact series need a centred lattice, got {other:?}"))),
    }
}

#[derive(Debug, Clone)]
struct Window {
    lo: i64,
    mass: Vec<f64>,
    scratch: Vec<f64>,
}

impl Window {
    fn delta() -> Self {
        Self { lo: 0, mass: vec![1.0], scratch: Vec::new() }
    }

    fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    fn hi(&self) -> i64 {
        self.lo + self.mass.len() as i64 - 1
    }

    fn step(&mut self, steps: &[(i64, f64)]) {
        if self.mass.is_empty() {
            return;
        }
        let min = steps[0].0;
        let max = steps[steps.len() - 1].0;
        let len = self.mass.len() + (max - min) as usize;
        self.scratch.clear();
        self.scratch.resize(len, 0.0);
        for &(j, p) in steps {
            let off = (j - min) as usize;
            for (o, &m) in self.scratch[off..off + self.mass.len()].iter_mut().zip(&self.mass) {
                *o += p * m;
            }
        }
        core::mem::swap(&mut self.mass, &mut self.scratch);
        self.lo += min;
    }

    /// Drops cells with mass below `eps` at both ends; returns the dropped mass.
    fn trim(&mut self, eps: f64) -> f64 {
        let first = self.mass.iter().position(|&m| m >= eps);
        let Some(first) = first else {
            let dropped = self.mass.iter().sum();
            self.mass.clear();
            return dropped;
        };
        let last = self.mass.iter().rposition(|&m| m >= eps).expect("nonempty");
        let dropped: f64 = self.mass[..first].iter().sum::<f64>() + self.mass[last + 1..].iter().sum::<f64>();
        if first > 0 || last + 1 < self.mass.len() {
            self.mass.copy_within(first..=last, 0);
            self.mass.truncate(last - first + 1);
            self.lo += first as i64;
        }
        dropped
    }

    /// Removes cells above `top`, calling `sink(k, mass)` for each.
    fn absorb_above<F: FnMut(i64, f64)>(&mut self, top: i64, mut sink: F) {
        if self.hi() <= top {
            return;
        }
        let keep = (top - self.lo + 1).max(0) as usize;
        for (i, &m) in self.mass.iter().enumerate().skip(keep) {
            sink(self.lo + i as i64, m);
        }
        self.mass.truncate(keep);
    }

    /// `sum_{lo_k <= k <= top} exp(theta k) m_k * weight(top - k)`.
    fn weighted_sum<W: Fn(i64) -> f64>(&self, bottom: i64, top: i64, theta: f64, weight: W) -> f64 {
        let hi = top.min(self.hi());
        let lo = bottom.max(self.lo);
        if hi < lo {
            return 0.0;
        }
        let down = (-theta).exp();
        let mut w = (theta * hi as f64).exp();
        let mut acc = 0.0;
        let mut k = hi;
        while k >= lo {
            let m = self.mass[(k - self.lo) as usize];
            if m != 0.0 {
                acc += w * m * weight(top - k);
            }
            w *= down;
            if w == 0.0 {
                break;
            }
            k -= 1;
        }
        acc
    }
}

/// The walk in lattice units under `P_theta`.
#[derive(Debug, Clone)]
struct TiltedLattice {
    steps: Vec<(i64, f64)>,
    /// `theta * span`.
    theta: f64,
    delta: f64,
}

impl TiltedLattice {
    fn new(units: &[(i64, f64)], span: f64, theta: f64, a: f64) -> Self {
        let theta_u = theta * span;
        let weights: Vec<f64> = units.iter().map(|&(k, p)| p * (-theta_u * k as f64).exp()).collect();
        let phi: f64 = weights.iter().sum();
        let steps = units.iter().zip(&weights).map(|(&(k, _), &w)| (k, w / phi)).collect();
        Self { steps, theta: theta_u, delta: a + phi.ln() }
    }
}

/// Tilt for the series at exponent `a`, and whether the tail can be certified.
fn series_setup(spec: &IncrementSpec, a: f64) -> Result<(CriticalData, f64, Option<(f64, f64)>)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("exponent a = {a} must be finite and > 0")));
    }
    let cd = critical_data(spec)?;
    // (theta, Chernoff point t_c with its ratio q = exp(a) phi(t_c) < 1)
    let (theta, chernoff) = if cd.nonnegative {
        if a < cd.r {
            let theta = gamma_of_with(spec, a, &cd)?.gamma();
            let a2 = if cd.r.is_finite() { 0.5 * (a + cd.r) } else { a + 1.0 };
            let tc = gamma_of_with(spec, a2, &cd)?.gamma();
            (theta, Some((tc, (a - a2).exp())))
        } else {
            (0.0, None)
        }
    } else if !cd.has_positive_exponent() {
        (0.0, None)
    } else {
        let gamma0 = cd.gamma0.expect("positive R has a minimizer");
        if cd.is_critical(a) || a > cd.r {
            (gamma0, None)
        } else {
            let theta = gamma_of_with(spec, a, &cd)?.gamma();
            (theta, Some((gamma0, (a - cd.r).exp())))
        }
    };
    Ok((cd, theta, chernoff))
}

enum Bound {
    /// Terms are at most `c q^n`, divided by `n` when `harmonic`.
    Certified { c: f64, q: f64, harmonic: bool },
    /// Terms are averaged over blocks of `block` consecutive indices before
    /// the power-law fit, which removes lattice periodicity.
    Heuristic { threshold_scale: f64, block: usize },
}

/// Sums `next(n)` for `n = start, start + 1, ...`; `next` returns `None` once
/// every remaining term is exactly zero.
fn run_series<F: FnMut(u64) -> Option<f64>>(
    start: u64,
    bound: Bound,
    opts: &SeriesOptions,
    mut next: F,
) -> SeriesResult {
    let mut partial = 0.0;
    let mut first = 0.0;
    let mut terms: Vec<(f64, f64)> = Vec::new();
    let mut n = start;
    let mut checkpoint = FIRST_CHECKPOINT;
    let mut tail = f64::INFINITY;
    let mut fitted = None;
    let mut diverged = false;
    let tail_kind = match bound {
        Bound::Certified { .. } => TailKind::Certified,
        Bound::Heuristic { .. } => TailKind::Heuristic,
    };
    loop {
        let Some(t) = next(n) else {
            tail = 0.0;
            break;
        };
        partial += t;
        if first == 0.0 && t > 0.0 {
            first = t;
        }
        match bound {
            Bound::Certified { c, q, harmonic } => {
                let mut b = c * q.powf((n + 1) as f64) / (1.0 - q);
                if harmonic {
                    b /= (n + 1) as f64;
                }
                tail = b;
                if b <= opts.rel_tol * partial.abs() || b < f64::MIN_POSITIVE {
                    break;
                }
            }
            Bound::Heuristic { threshold_scale, block } => {
                terms.push((n.max(1) as f64, t));
                if !partial.is_finite() || (first > 0.0 && partial > DIVERGENCE_FACTOR * first * threshold_scale) {
                    diverged = true;
                    break;
                }
                let last = n + 1 - start >= opts.max_terms;
                if n >= checkpoint || last {
                    if n >= checkpoint {
                        checkpoint *= 2;
                    }
                    let lo = (n / 10) as f64;
                    let recent: Vec<(f64, f64)> = terms
                        .iter()
                        .filter(|p| p.0 >= lo)
                        .copied()
                        .collect::<Vec<_>>()
                        .chunks_exact(block)
                        .map(|c| {
                            let k = c.len() as f64;
                            (c.iter().map(|p| p.0).sum::<f64>() / k, c.iter().map(|p| p.1).sum::<f64>() / k)
                        })
                        .collect();
                    match loglog_fit(&recent) {
                        Some((slope, intercept)) => {
                            fitted = Some(slope);
                            if slope > -1.0 {
                                diverged = true;
                                break;
                            }
                            tail = intercept.exp() * (n as f64).powf(slope + 1.0) / (-slope - 1.0);
                            if tail <= opts.rel_tol * partial.abs() {
                                break;
                            }
                        }
                        None => {
                            // Terms vanished: the series is a finite sum.
                            if recent.iter().all(|p| p.1 == 0.0) {
                                tail = 0.0;
                                break;
                            }
                        }
                    }
                }
            }
        }
        if n + 1 - start >= opts.max_terms {
            break;
        }
        n += 1;
    }
    let (value, tail_bound) = match (tail_kind, diverged) {
        (_, true) => (f64::INFINITY, f64::INFINITY),
        (TailKind::Certified, false) => (partial, tail),
        (TailKind::Heuristic, false) => {
            let t = if tail.is_finite() { tail } else { 0.0 };
            (partial + t, tail)
        }
    };
    SeriesResult {
        value,
        n_terms: n + 1 - start,
        tail_bound,
        tail_kind,
        diverged,
        fitted_exponent: fitted,
        truncated_mass: 0.0,
    }
}

fn bound_for(chernoff: Option<(f64, f64)>, cd: &CriticalData, x: f64, harmonic: bool, units: &[(i64, f64)]) -> Bound {
    match chernoff {
        Some((tc, q)) => Bound::Certified { c: (tc * x).exp(), q, harmonic },
        None => Bound::Heuristic {
            threshold_scale: (cd.gamma0.unwrap_or(0.0) * x).exp(),
            block: 2 * (units[units.len() - 1].0 - units[0].0).max(1) as usize,
        },
    }
}

fn level_units(x: f64, span: f64) -> Result<i64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("level x = {x} must be finite and >= 0")));
    }
    Ok((x / span + 1e-9).floor() as i64)
}

/// Law of `S_n` on the window `[lo, hi]` (values, multiples of the span).
pub fn pmf_power(spec: &IncrementSpec, n: u64, lo: f64, hi: f64, tol: f64) -> Result<PmfTable> {
    let (_, span, units) = lattice_of(spec)?;
    let lo_u = (lo / span).round() as i64;
    let hi_u = (hi / span).round() as i64;
    if (lo_u as f64 * span - lo).abs() > 1e-9 * span.max(lo.abs())
        || (hi_u as f64 * span - hi).abs() > 1e-9 * span.max(hi.abs())
        || lo_u > hi_u
    {
        return Err(Error::Domain(format!("window [{lo}, {hi}] is not an interval of {span} Z")));
    }
    let mut w = Window::delta();
    let (mut below, mut above) = (0.0, 0.0);
    let clip = |w: &mut Window, below: &mut f64, above: &mut f64| {
        w.absorb_above(hi_u, |_, m| *above += m);
        let cut = (lo_u - w.lo).clamp(0, w.mass.len() as i64) as usize;
        *below += w.mass[..cut].iter().sum::<f64>();
        w.mass.drain(..cut);
        w.lo += cut as i64;
    };
    clip(&mut w, &mut below, &mut above);
    for _ in 0..n {
        w.step(&units);
        clip(&mut w, &mut below, &mut above);
    }
    if below + above > tol {
        return Err(Error::Domain(format!(
            "window [{lo}, {hi}] leaves mass {:e} outside, above tolerance {tol:e}",
            below + above
        )));
    }
    let mut probs = vec![0.0; (hi_u - lo_u + 1) as usize];
    for (i, &m) in w.mass.iter().enumerate() {
        probs[(w.lo - lo_u) as usize + i] = m;
    }
    Ok(PmfTable { span, lo: lo_u, probs, below, above })
}

/// `K(a) = sum_{n>=1} exp(an)/n P{S_n <= 0}`.
pub fn k_of(spec: &IncrementSpec, a: f64, opts: &SeriesOptions) -> Result<SeriesResult> {
    let (_, span, units) = lattice_of(spec)?;
    let (cd, theta, chernoff) = series_setup(spec, a)?;
    let tl = TiltedLattice::new(&units, span, theta, a);
    let mut w = Window::delta();
    let mut trimmed = 0.0;
    let mut res = run_series(1, bound_for(chernoff, &cd, 0.0, true, &units), opts, |n| {
        w.step(&tl.steps);
        trimmed += w.trim(TRIM_MASS);
        if w.is_empty() {
            return None;
        }
        let s = w.weighted_sum(i64::MIN, 0, tl.theta, |_| 1.0);
        Some((tl.delta * n as f64).exp() * s / n as f64)
    });
    res.truncated_mass = trimmed;
    Ok(res)
}

/// `V(x) = sum_{n>=0} exp(an) P{S_n <= x}`.
pub fn v_of(spec: &IncrementSpec, a: f64, x: f64, opts: &SeriesOptions) -> Result<SeriesResult> {
    let (_, span, units) = lattice_of(spec)?;
    let xu = level_units(x, span)?;
    let (cd, theta, chernoff) = series_setup(spec, a)?;
    let tl = TiltedLattice::new(&units, span, theta, a);
    let mut w = Window::delta();
    let mut trimmed = 0.0;
    let mut res = run_series(0, bound_for(chernoff, &cd, x, false, &units), opts, |n| {
        if n > 0 {
            w.step(&tl.steps);
            trimmed += w.trim(TRIM_MASS);
        }
        if w.is_empty() {
            return None;
        }
        let s = w.weighted_sum(i64::MIN, xu, tl.theta, |_| 1.0);
        Some((tl.delta * n as f64).exp() * s)
    });
    res.truncated_mass = trimmed;
    Ok(res)
}

/// `E exp(a tau(x)) = 1 + (exp(a) - 1) sum_{n>=0} exp(an) P{max_{k<=n} S_k <= x}`.
pub fn exp_moment_tau_exact(spec: &IncrementSpec, a: f64, x: f64, opts: &SeriesOptions) -> Result<SeriesResult> {
    let (_, span, units) = lattice_of(spec)?;
    let xu = level_units(x, span)?;
    let (cd, theta, chernoff) = series_setup(spec, a)?;
    let tl = TiltedLattice::new(&units, span, theta, a);
    let mut w = Window::delta();
    let mut trimmed = 0.0;
    let mut res = run_series(0, bound_for(chernoff, &cd, x, false, &units), opts, |n| {
        if n > 0 {
            w.step(&tl.steps);
            w.absorb_above(xu, |_, _| {});
            trimmed += w.trim(TRIM_MASS);
        }
        if w.is_empty() {
            return None;
        }
        let s = w.weighted_sum(i64::MIN, xu, tl.theta, |_| 1.0);
        Some((tl.delta * n as f64).exp() * s)
    });
    res.truncated_mass = trimmed;
    let factor = a.exp_m1();
    if !res.diverged {
        res.value = 1.0 + factor * res.value;
        res.tail_bound *= factor;
    }
    Ok(res)
}

/// `P{M > m}` for `m = 0, 1, ...` in lattice units, `M = inf_{n>=1} S_n`.
/// Entries stop at the largest atom, above which the survival is zero.
pub fn min_survival(spec: &IncrementSpec) -> Result<Vec<f64>> {
    let (_, span, units) = lattice_of(spec)?;
    let max_u = units[units.len() - 1].0;
    if max_u <= 0 {
        return Ok(Vec::new());
    }
    let min_u = units[0].0;
    let barrier = lundberg_barrier(spec, SURVIVAL_EPSILON)?;
    // h(u) = P{u + S_n > 0 for all n >= 0} on u = 1..=top; 1 above top.
    let top = (barrier / span).ceil() as i64 + 1;
    let n = top as usize;
    let lower = (-min_u).max(0) as usize;
    let upper = max_u.max(0) as usize;
    let mut m = BandedMatrix::zeros(n, lower, upper);
    let mut rhs = vec![0.0; n];
    for u in 1..=top {
        let i = (u - 1) as usize;
        m.add(i, i, 1.0);
        for &(j, p) in &units {
            let v = u + j;
            if v > top {
                rhs[i] += p;
            } else if v >= 1 {
                m.add(i, (v - 1) as usize, -p);
            }
        }
    }
    let h = m
        .solve(rhs)
        .ok_or_else(|| Error::Domain("survival system is singular (no upward drift)".into()))?;
    let h_at = |v: i64| -> f64 {
        if v <= 0 {
            0.0
        } else if v > top {
            1.0
        } else {
            h[(v - 1) as usize].clamp(0.0, 1.0)
        }
    };
    Ok((0..max_u)
        .map(|mm| units.iter().map(|&(j, p)| p * h_at(j - mm)).sum())
        .collect())
}

/// `E exp(-gamma M+)` from [`min_survival`].
pub fn exp_neg_gamma_mplus(spec: &IncrementSpec, gamma: f64) -> Result<f64> {
    let (_, span, _) = lattice_of(spec)?;
    let g = min_survival(spec)?;
    let at = |m: usize| g.get(m).copied().unwrap_or(0.0);
    let mut one_minus = 0.0;
    for m in 1..=g.len() {
        one_minus += (at(m - 1) - at(m)) * (-(gamma * span * m as f64)).exp_m1();
    }
    Ok(1.0 + one_minus)
}

/// `E exp(a rho(x)) = sum_n exp(an) sum_{k <= x} P{S_n = k} P{M > x - k}`.
pub fn exp_moment_rho_exact(spec: &IncrementSpec, a: f64, x: f64, opts: &SeriesOptions) -> Result<SeriesResult> {
    let (_, span, units) = lattice_of(spec)?;
    let xu = level_units(x, span)?;
    let (cd, theta, chernoff) = series_setup(spec, a)?;
    let survival = min_survival(spec)?;
    let depth = survival.len() as i64;
    let tl = TiltedLattice::new(&units, span, theta, a);
    let mut w = Window::delta();
    let mut trimmed = 0.0;
    let g = |m: i64| survival.get(m as usize).copied().unwrap_or(0.0);
    let mut res = run_series(0, bound_for(chernoff, &cd, x, false, &units), opts, |n| {
        if n > 0 {
            w.step(&tl.steps);
            trimmed += w.trim(TRIM_MASS);
        }
        if w.is_empty() {
            return None;
        }
        let s = w.weighted_sum(xu - depth + 1, xu, tl.theta, g);
        Some((tl.delta * n as f64).exp() * s)
    });
    res.truncated_mass = trimmed;
    Ok(res)
}

/// Law of the first strict ascending ladder height under the tilt `theta`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LadderLaw {
    pub span: f64,
    /// `probs[j - 1] = P_theta{S_tau = j span}`.
    pub probs: Vec<f64>,
    /// Mass of paths still below zero when the recursion stopped.
    pub unresolved: f64,
    pub steps: u64,
}

impl LadderLaw {
    /// `(estimate, half_width)` of `E_theta g(S_tau)` for increasing `g`, the
    /// unresolved mass placed at the smallest and largest possible heights.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> (f64, f64) {
        let resolved: f64 = self.probs.iter().enumerate().map(|(i, p)| p * g((i + 1) as f64 * self.span)).sum();
        let lo = resolved + self.unresolved * g(self.span);
        let hi = resolved + self.unresolved * g(self.probs.len() as f64 * self.span);
        (0.5 * (lo + hi), 0.5 * (hi - lo))
    }
}

/// Absorbing recursion for the ladder height under `P_theta`.
pub fn ladder_law(spec: &IncrementSpec, theta: f64, max_steps: u64) -> Result<LadderLaw> {
    let (_, span, units) = lattice_of(spec)?;
    let max_u = units[units.len() - 1].0;
    if max_u <= 0 {
        return Err(Error::Domain("the walk never moves up".into()));
    }
    let tl = TiltedLattice::new(&units, span, theta, 0.0);
    if tl.steps.iter().map(|&(k, p)| k as f64 * p).sum::<f64>() < -1e-12 {
        return Err(Error::Domain(format!("tilt {theta} gives a walk drifting down")));
    }
    if max_u == 1 {
        return Ok(LadderLaw { span, probs: vec![1.0], unresolved: 0.0, steps: 0 });
    }
    let mut probs = vec![0.0; max_u as usize];
    let mut w = Window::delta();
    let mut steps = 0;
    let mut remaining = 1.0;
    while steps < max_steps && remaining > 1e-16 {
        w.step(&tl.steps);
        w.absorb_above(0, |k, m| probs[(k - 1) as usize] += m);
        w.trim(TRIM_MASS);
        remaining = w.mass.iter().sum();
        steps += 1;
    }
    let total: f64 = probs.iter().sum();
    Ok(LadderLaw { span, probs, unresolved: (1.0 - total).max(0.0), steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srw() -> IncrementSpec {
        IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap()
    }

    #[test]
    fn small_convolution_powers() {
        let t = pmf_power(&srw(), 2, -10.0, 10.0, 1e-12).unwrap();
        assert!((t.prob(2.0) - 0.64).abs() < 1e-15);
        assert!((t.prob(0.0) - 0.32).abs() < 1e-15);
        assert!((t.prob(-2.0) - 0.04).abs() < 1e-15);
        let one = pmf_power(&srw(), 1, -1.0, 1.0, 0.0).unwrap();
        assert_eq!(one.probs, [0.2, 0.0, 0.8]);
        let l = IncrementSpec::lattice([(2.0, 0.6), (-1.0, 0.4)]).unwrap();
        let t = pmf_power(&l, 3, -3.0, 6.0, 1e-12).unwrap();
        assert!((t.prob(6.0) - 0.216).abs() < 1e-15);
        assert!(pmf_power(&srw(), 3, 0.0, 3.0, 1e-3).is_err());
    }

    #[test]
    fn srw_series_against_closed_forms() {
        let opts = SeriesOptions::default();
        let tau = exp_moment_tau_exact(&srw(), 0.1, 0.0, &opts).unwrap();
        assert_eq!(tau.tail_kind, TailKind::Certified);
        assert!((tau.value - 1.205_179_543_509_171_4).abs() < 1e-12, "{tau:?}");
        let k = k_of(&srw(), 0.1, &opts).unwrap();
        assert!((k.value - 0.668_298_599_888_025_3).abs() < 1e-12, "{k:?}");
        let rho = exp_moment_rho_exact(&srw(), 0.1, 0.0, &opts).unwrap();
        assert!((rho.value - 1.284_168_934_297_415_6).abs() < 1e-12, "{rho:?}");
    }

    #[test]
    fn skip_free_powers() {
        let opts = SeriesOptions::default();
        let base = 1.205_179_543_509_171_4f64;
        for x in [1.0, 5.0] {
            let t = exp_moment_tau_exact(&srw(), 0.1, x, &opts).unwrap();
            assert!((t.value / base.powf(x + 1.0) - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn deterministic_walk() {
        let spec = IncrementSpec::lattice([(1.0, 1.0)]).unwrap();
        let opts = SeriesOptions::default();
        assert_eq!(k_of(&spec, 0.3, &opts).unwrap().value, 0.0);
        assert_eq!(v_of(&spec, 0.3, 0.0, &opts).unwrap().value, 1.0);
        let t = exp_moment_tau_exact(&spec, 0.3, 3.0, &opts).unwrap();
        assert!((t.value - 1.2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn srw_critical_series() {
        let opts = SeriesOptions::default();
        let r = -(0.8f64.ln());
        let v = v_of(&srw(), r, 0.0, &opts).unwrap();
        assert!(v.diverged);
        let s = v.fitted_exponent.unwrap();
        assert!((s + 0.5).abs() < 0.1, "{s}");
        let tau = exp_moment_tau_exact(&srw(), r, 0.0, &SeriesOptions { rel_tol: 1e-6, max_terms: 20_000 }).unwrap();
        assert!(!tau.diverged);
        assert!((tau.value - 2.0).abs() < 1e-3, "{tau:?}");
    }

    #[test]
    fn srw_min_survival() {
        let g = min_survival(&srw()).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] - 0.6).abs() < 1e-12);
        let gamma = 0.186_628_554_606_203_23;
        let e = exp_neg_gamma_mplus(&srw(), gamma).unwrap();
        assert!((e - (0.4 + 0.6 * (-gamma).exp())).abs() < 1e-12);
    }

    #[test]
    fn two_up_one_down_ladder() {
        let spec = IncrementSpec::lattice([(2.0, 0.6), (-1.0, 0.4)]).unwrap();
        let law = ladder_law(&spec, 0.160_638_856_219_414_26, 1_000_000).unwrap();
        assert!(law.unresolved < 1e-14);
        assert!((law.probs[0] - 0.395_045_796_47).abs() < 1e-9);
        let (m, hw) = law.expect(|s| s);
        assert!((m - 1.604_954_203_5).abs() < 1e-9 && hw < 1e-13);
    }
}
