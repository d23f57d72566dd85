//! Prefactors of the exponential growth `E exp(a Q(x)) ~ C exp(gamma x)`.
//!
//! With `gamma = gamma(a)`, `P_gamma` the tilted law, `tau` the first strict
//! ascending ladder epoch and `M = inf_{n>=1} S_n`:
//!
//! * `tau(x)`: `(E exp(a tau) - 1) / (gamma E_gamma S_tau)`;
//! * `N(x)`: `exp(-a) E_gamma int_0^{S_tau} exp(gamma y) f(-y) dy / E_gamma S_tau`
//!   with `f(-y) = E exp(a N(-y))`;
//! * `rho(x)`: `exp(-a) (1 - E exp(-gamma M+)) / (gamma E X exp(-gamma X))`;
//! * nonnegative increments: `(1 - exp(-a)) / (gamma E X exp(-gamma X))`.
//!
//! On a lattice with span `lambda` every `1/gamma` becomes
//! `lambda / (1 - exp(-lambda gamma))`, integrals become sums over
//! `y = lambda k`, `k >= 1`, and `x` runs through `lambda N`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::analyze::{classify_with, critical_data, gamma_of_with, CriticalData, Quantity};
use crate::dist::{IncrementSpec, LatticeStructure};
use crate::error::{Error, Result};
use crate::exact::{
    exp_moment_rho_exact, exp_moment_tau_exact, exp_neg_gamma_mplus, ladder_law, SeriesOptions,
};
use crate::numeric::stats::{Moments, PairMoments};
use crate::tilt::TiltParams;
use crate::walk::{
    estimate_exp_moment_direct, estimate_exp_moment_tau_tilted, estimate_ladder_quantities,
    estimate_min_functionals, ladder_heights, simulate_visit_counts, Accumulator, Executor, McConfig,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ConstantCase {
    Lattice { span: f64 },
    NonLattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Exact,
    MonteCarlo,
    /// Deterministic, with `std_error` the half-width of a bracketing interval.
    Bounded,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Ingredient {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
}

impl Ingredient {
    fn new(name: &str, value: f64, std_error: f64, method: Method) -> Self {
        Self { name: name.into(), value, std_error, method }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AsymptoticConstant {
    pub quantity: Quantity,
    pub case: ConstantCase,
    pub a: f64,
    pub gamma: f64,
    pub value: f64,
    /// First-order (delta method) standard error.
    pub combined_se: f64,
    pub ingredients: Vec<Ingredient>,
    /// `|exp(a) phi(gamma) - 1|`.
    pub witness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AsymOptions {
    pub mc: McConfig,
    pub series: SeriesOptions,
    /// Step cap of the lattice ladder-height recursion.
    pub ladder_max_steps: u64,
    /// Grid halvings tried before the `N` constant gives up.
    pub max_refinements: u32,
}

impl Default for AsymOptions {
    fn default() -> Self {
        Self { mc: McConfig::default(), series: SeriesOptions::default(), ladder_max_steps: 100_000, max_refinements: 3 }
    }
}

fn case_of(spec: &IncrementSpec) -> Result<ConstantCase> {
    match spec.lattice_structure() {
        LatticeStructure::Lattice { span } => Ok(ConstantCase::Lattice { span }),
        LatticeStructure::NonLattice => Ok(ConstantCase::NonLattice),
        s @ LatticeStructure::OffsetLattice { .. } => Err(Error::Unsupported(format!(
            "asymptotic constants are not defined here for offset lattices ({s:?})"
        ))),
    }
}

/// `lambda / (1 - exp(-lambda gamma))` on a lattice, `1 / gamma` otherwise.
fn renewal_factor(case: ConstantCase, gamma: f64) -> f64 {
    match case {
        ConstantCase::Lattice { span } => span / -(-span * gamma).exp_m1(),
        ConstantCase::NonLattice => 1.0 / gamma,
    }
}

fn setup(spec: &IncrementSpec, a: f64, q: Quantity) -> Result<(CriticalData, TiltParams, ConstantCase)> {
    let cd = critical_data(spec)?;
    classify_with(spec, a, &cd)?.require_finite(q)?;
    let case = case_of(spec)?;
    let tp = gamma_of_with(spec, a, &cd)?;
    Ok((cd, tp, case))
}

/// Relative standard error of `u / v` from relative variances and covariance.
fn ratio_rel_se(var_u: f64, u: f64, var_v: f64, v: f64, cov: f64) -> f64 {
    (var_u / (u * u) + var_v / (v * v) - 2.0 * cov / (u * v)).max(0.0).sqrt()
}

/// Constant for `tau(x)`; nonnegative increments are refused here and belong
/// to [`const_nonneg_tau`].
pub fn const_tau<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    opts: &AsymOptions,
    exec: &E,
) -> Result<AsymptoticConstant> {
    if !spec.has_negative_part() {
        return Err(Error::Unsupported(
            "increments are nonnegative; use the nonnegative-walk constant".into(),
        ));
    }
    const_tau_ladder(spec, a, opts, exec)
}

/// The ladder-route constant for `tau(x)`, for any increment law.
pub fn const_tau_ladder<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    opts: &AsymOptions,
    exec: &E,
) -> Result<AsymptoticConstant> {
    let (_, tp, case) = setup(spec, a, Quantity::Tau)?;
    let gamma = tp.gamma();
    let factor = renewal_factor(case, gamma);
    let (value, combined_se, ingredients) = match case {
        ConstantCase::Lattice { .. } => {
            let law = ladder_law(spec, gamma, opts.ladder_max_steps)?;
            let (m, m_hw) = law.expect(|s| s);
            let (e_ladder, e_ladder_hw) = law.expect(|s| (gamma * s).exp());
            let series = exp_moment_tau_exact(spec, tp.a(), 0.0, &opts.series)?;
            if series.diverged {
                return Err(Error::InfiniteMoment {
                    quantity: Quantity::Tau,
                    a,
                    reason: crate::analyze::Reason::AboveCritical,
                });
            }
            let e = series.value;
            let value = factor * (e - 1.0) / m;
            let rel = ((series.tail_bound / (e - 1.0)).powi(2) + (m_hw / m).powi(2)).sqrt();
            let method = if law.unresolved > 0.0 { Method::Bounded } else { Method::Exact };
            let ingredients = vec![
                Ingredient::new("E exp(a tau)", e, series.tail_bound, Method::Exact),
                Ingredient::new("E_gamma S_tau", m, m_hw, method),
                Ingredient::new("E_gamma exp(gamma S_tau)", e_ladder, e_ladder_hw, method),
            ];
            (value, value * rel, ingredients)
        }
        ConstantCase::NonLattice => {
            let lad = estimate_ladder_quantities(spec, a, &opts.mc, exec)?;
            let e = lad.e_exp_a_tau.mean;
            let m = lad.e_gamma_s_tau.mean;
            let value = factor * (e - 1.0) / m;
            let rel = ratio_rel_se(
                lad.e_exp_a_tau.std_error.powi(2),
                e - 1.0,
                lad.e_gamma_s_tau.std_error.powi(2),
                m,
                lad.covariance,
            );
            let ingredients = vec![
                Ingredient::new("E_gamma exp(gamma S_tau)", e, lad.e_exp_a_tau.std_error, Method::MonteCarlo),
                Ingredient::new("E_gamma S_tau", m, lad.e_gamma_s_tau.std_error, Method::MonteCarlo),
            ];
            (value, value * rel, ingredients)
        }
    };
    Ok(AsymptoticConstant {
        quantity: Quantity::Tau,
        case,
        a: tp.a(),
        gamma,
        value,
        combined_se,
        ingredients,
        witness: tp.witness(),
    })
}

/// Constant for nonnegative increments, shared by `tau`, `N` and `rho` up to
/// the factor `exp(-a)` (there `N(x) = rho(x) = tau(x) - 1`).
pub fn const_nonneg_tau(spec: &IncrementSpec, a: f64) -> Result<AsymptoticConstant> {
    if spec.has_negative_part() {
        return Err(Error::Domain("increments take negative values".into()));
    }
    let (_, tp, case) = setup(spec, a, Quantity::Tau)?;
    let gamma = tp.gamma();
    let d = -spec.laplace_left_derivative(gamma)?;
    let value = -(-a).exp_m1() * renewal_factor(case, gamma) / d;
    Ok(AsymptoticConstant {
        quantity: Quantity::Tau,
        case,
        a,
        gamma,
        value,
        combined_se: 0.0,
        ingredients: vec![Ingredient::new("E X exp(-gamma X)", d, 0.0, Method::Exact)],
        witness: tp.witness(),
    })
}

fn scaled(mut c: AsymptoticConstant, quantity: Quantity, factor: f64) -> AsymptoticConstant {
    c.quantity = quantity;
    c.value *= factor;
    c.combined_se *= factor;
    c
}

/// Constant for `rho(x)`.
pub fn const_rho<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    opts: &AsymOptions,
    exec: &E,
) -> Result<AsymptoticConstant> {
    let (_, tp, case) = setup(spec, a, Quantity::Rho)?;
    if !spec.has_negative_part() {
        return Ok(scaled(const_nonneg_tau(spec, a)?, Quantity::Rho, (-a).exp()));
    }
    let gamma = tp.gamma();
    let d = -spec.laplace_left_derivative(gamma)?;
    if !(d > 0.0) {
        return Err(Error::InconsistentTilt(format!("E X exp(-gamma X) = {d} is not positive")));
    }
    let (e, e_se, method) = match case {
        ConstantCase::Lattice { .. } => (exp_neg_gamma_mplus(spec, gamma)?, 0.0, Method::Exact),
        ConstantCase::NonLattice => {
            let m = estimate_min_functionals(spec, gamma, &opts.mc, exec)?;
            (m.exp_neg_gamma_mplus.mean, m.exp_neg_gamma_mplus.std_error, Method::MonteCarlo)
        }
    };
    let value = (-tp.a()).exp() * (1.0 - e) * renewal_factor(case, gamma) / d;
    Ok(AsymptoticConstant {
        quantity: Quantity::Rho,
        case,
        a: tp.a(),
        gamma,
        value,
        combined_se: value * e_se / (1.0 - e),
        ingredients: vec![
            Ingredient::new("E exp(-gamma M+)", e, e_se, method),
            Ingredient::new("E X exp(-gamma X)", d, 0.0, Method::Exact),
        ],
        witness: tp.witness(),
    })
}

#[derive(Debug, Clone)]
struct LevelSums {
    z: Vec<Moments>,
}

impl Accumulator for LevelSums {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            a.merge(b);
        }
    }
}

#[derive(Debug, Clone, Default)]
struct NodeSums {
    s1: Vec<f64>,
}

impl Accumulator for NodeSums {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.s1.iter_mut().zip(other.s1) {
            *a += b;
        }
    }
}

/// Trapezoid weights `w_j` with `mean_s int_0^s exp(gamma y) f(y) dy =
/// sum_j w_j f(y_j)` for `f` linear between grid points `y_j = j h`.
fn trapezoid_weights(samples: &[f64], h: f64, gamma: f64, nodes: usize) -> Vec<f64> {
    let mut full = vec![0u64; nodes + 1];
    let mut w = vec![0.0; nodes];
    for &s in samples {
        let i = ((s / h).floor() as usize).min(nodes - 2);
        full[i] += 1;
        let y = i as f64 * h;
        let d = s - y;
        let es = (gamma * s).exp();
        w[i] += 0.5 * d * ((gamma * y).exp() + es * (1.0 - d / h));
        w[i + 1] += 0.5 * d * es * (d / h);
    }
    // Samples with i full segments cover segments 0..i.
    let mut covering = 0u64;
    let mut reach = vec![0u64; nodes + 1];
    for i in (0..=nodes).rev() {
        covering += full[i];
        reach[i] = covering;
    }
    for j in 0..nodes {
        let e = (gamma * j as f64 * h).exp();
        let left = if j < nodes { reach[j + 1] } else { 0 };
        let right = if j >= 1 { reach[j] } else { 0 };
        w[j] += 0.5 * h * e * (left + right) as f64;
    }
    let n = samples.len() as f64;
    w.iter_mut().for_each(|v| *v /= n);
    w
}

/// Constant for `N(x)`. `f(-y)` comes from direct simulation; the ladder part
/// is exact on a lattice and simulated under `P_gamma` otherwise.
pub fn const_n<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    opts: &AsymOptions,
    exec: &E,
) -> Result<AsymptoticConstant> {
    let (_, tp, case) = setup(spec, a, Quantity::N)?;
    let gamma = tp.gamma();
    let nonneg = !spec.has_negative_part();
    let damp = (-tp.a()).exp();
    let f_stream = opts.mc.n_paths;
    let (value, combined_se, ingredients) = match case {
        ConstantCase::Lattice { span } => {
            let law = ladder_law(spec, gamma, opts.ladder_max_steps)?;
            let (m, m_hw) = law.expect(|s| s);
            let kmax = law.probs.len();
            // P{S_tau >= k span}, unresolved mass split evenly.
            let mut tail = vec![0.0; kmax];
            let mut acc = 0.5 * law.unresolved;
            for k in (0..kmax).rev() {
                acc += law.probs[k];
                tail[k] = acc;
            }
            let w: Vec<f64> = (0..kmax)
                .map(|k| span * (gamma * span * (k + 1) as f64).exp() * tail[k])
                .collect();
            let base: f64 = w.iter().sum();
            let (i_mean, i_se) = if nonneg {
                (base, 0.0)
            } else {
                let ys: Vec<f64> = (1..=kmax).map(|k| k as f64 * span).collect();
                let (sums, n_trunc) = simulate_visit_counts(
                    spec,
                    &ys,
                    &opts.mc,
                    f_stream,
                    exec,
                    || LevelSums { z: vec![Moments::default()] },
                    |counts, acc| {
                        let extra: f64 = counts
                            .iter()
                            .zip(&w)
                            .map(|(&c, &wk)| if c > 0 { wk * (a * c as f64).exp_m1() } else { 0.0 })
                            .sum();
                        acc.z[0].push(base + extra);
                    },
                )?;
                check_truncation(n_trunc, &opts.mc)?;
                (sums.z[0].mean, sums.z[0].std_error())
            };
            let value = damp * i_mean / m;
            let rel = ((i_se / i_mean).powi(2) + (m_hw / m).powi(2)).sqrt();
            let ingredients = vec![
                Ingredient::new("E_gamma S_tau", m, m_hw, if law.unresolved > 0.0 { Method::Bounded } else { Method::Exact }),
                Ingredient::new(
                    "E_gamma sum_k lambda exp(gamma lambda k) f(-lambda k)",
                    i_mean,
                    i_se,
                    if nonneg { Method::Exact } else { Method::MonteCarlo },
                ),
            ];
            (value, value * rel, ingredients)
        }
        ConstantCase::NonLattice => {
            let raw = ladder_heights(spec, &tp, &opts.mc, 0, exec)?;
            let samples: Vec<f64> = raw.iter().flatten().copied().collect();
            check_truncation((raw.len() - samples.len()) as u64, &opts.mc)?;
            let mut sm = Moments::default();
            samples.iter().for_each(|&s| sm.push(s));
            let m = sm.mean;
            if nonneg {
                let mut pm = PairMoments::default();
                samples.iter().for_each(|&s| pm.push((gamma * s).exp_m1() / gamma, s));
                let i = pm.x.mean;
                let value = damp * i / m;
                let rel = ratio_rel_se(pm.x.variance() / pm.x.count as f64, i, pm.y.variance() / pm.y.count as f64, m, pm.covariance() / pm.x.count as f64);
                let ingredients = vec![
                    Ingredient::new("E_gamma S_tau", m, sm.std_error(), Method::MonteCarlo),
                    Ingredient::new("E_gamma int_0^S_tau exp(gamma y) dy", i, pm.x.std_error(), Method::MonteCarlo),
                ];
                (value, value * rel, ingredients)
            } else {
                nonlattice_n(spec, a, gamma, damp, &samples, m, &sm, opts, exec)?
            }
        }
    };
    Ok(AsymptoticConstant {
        quantity: Quantity::N,
        case,
        a: tp.a(),
        gamma,
        value,
        combined_se,
        ingredients,
        witness: tp.witness(),
    })
}

fn check_truncation(n_truncated: u64, mc: &McConfig) -> Result<()> {
    if n_truncated as f64 > crate::walk::MAX_TRUNCATED_FRACTION * mc.n_paths as f64 {
        return Err(Error::Simulation(format!(
            "{n_truncated} of {} paths reached the horizon cap",
            mc.n_paths
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn nonlattice_n<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    gamma: f64,
    damp: f64,
    samples: &[f64],
    m: f64,
    sm: &Moments,
    opts: &AsymOptions,
    exec: &E,
) -> Result<(f64, f64, Vec<Ingredient>)> {
    let levels = opts.max_refinements as usize + 1;
    let y_max = samples.iter().copied().fold(0.0, f64::max);
    let h0 = m / 50.0;
    let fine = 1usize << (levels - 1);
    let h_fine = h0 / fine as f64;
    let fine_nodes = (y_max / h0).ceil() as usize * fine + 2;
    let ys: Vec<f64> = (0..fine_nodes).map(|j| j as f64 * h_fine).collect();
    // Level l uses every (fine >> l)-th fine node, spacing h0 / 2^l.
    let weights: Vec<Vec<f64>> = (0..levels)
        .map(|l| {
            let stride = fine >> l;
            let nodes = (fine_nodes - 1) / stride + 1;
            trapezoid_weights(samples, h_fine * stride as f64, gamma, nodes)
        })
        .collect();
    let bases: Vec<f64> = weights.iter().map(|w| w.iter().sum()).collect();
    let (level_sums, n_trunc) = simulate_visit_counts(
        spec,
        &ys,
        &opts.mc,
        opts.mc.n_paths,
        exec,
        || LevelSums { z: vec![Moments::default(); levels] },
        |counts, acc| {
            for l in 0..levels {
                let stride = fine >> l;
                let w = &weights[l];
                let mut extra = 0.0;
                let mut j = 0;
                while j * stride < counts.len() {
                    let c = counts[j * stride];
                    if c > 0 {
                        extra += w[j] * (a * c as f64).exp_m1();
                    }
                    j += 1;
                }
                acc.z[l].push(bases[l] + extra);
            }
        },
    )?;
    check_truncation(n_trunc, &opts.mc)?;
    // f at the fine nodes, for the ladder-side variance of the integral.
    let (node_sums, _) = simulate_visit_counts(
        spec,
        &ys,
        &opts.mc,
        opts.mc.n_paths,
        exec,
        || NodeSums { s1: vec![0.0; fine_nodes] },
        |counts, acc| {
            for (j, &c) in counts.iter().enumerate() {
                if c > 0 {
                    acc.s1[j] += (a * c as f64).exp_m1();
                }
            }
        },
    )?;
    let n_f = (opts.mc.n_paths - n_trunc) as f64;
    let f_fine: Vec<f64> = node_sums.s1.iter().map(|s| 1.0 + s / n_f).collect();

    let integral_at = |l: usize| -> (f64, f64, f64) {
        let stride = fine >> l;
        let h = h_fine * stride as f64;
        let nodes = weights[l].len();
        let g: Vec<f64> = (0..nodes).map(|j| (gamma * j as f64 * h).exp() * f_fine[(j * stride).min(fine_nodes - 1)]).collect();
        let mut prefix = vec![0.0; nodes];
        for j in 1..nodes {
            prefix[j] = prefix[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
        }
        let mut pm = PairMoments::default();
        for &s in samples {
            let i = ((s / h).floor() as usize).min(nodes - 2);
            let d = s - i as f64 * h;
            let fi = f_fine[(i * stride).min(fine_nodes - 1)];
            let fi1 = f_fine[((i + 1) * stride).min(fine_nodes - 1)];
            let gs = (gamma * s).exp() * (fi + (fi1 - fi) * d / h);
            pm.push(prefix[i] + 0.5 * d * (g[i] + gs), s);
        }
        let n = pm.x.count as f64;
        let z = &level_sums.z[l];
        let var_i = z.variance() / z.count as f64 + pm.x.variance() / n;
        (z.mean, var_i, pm.covariance() / n)
    };

    let mut chosen = None;
    let mut prev = integral_at(0);
    for l in 1..levels {
        let cur = integral_at(l);
        if (cur.0 - prev.0).abs() <= cur.1.sqrt() {
            chosen = Some((l, cur));
            break;
        }
        prev = cur;
    }
    let Some((level, (i, var_i, cov))) = chosen else {
        return Err(Error::Refinement(format!(
            "the f-grid integral did not stabilise within one standard error after {} halvings of spacing {h0}",
            levels - 1
        )));
    };
    let value = damp * i / m;
    let var_m = sm.variance() / sm.count as f64;
    let rel = ratio_rel_se(var_i, i, var_m, m, cov);
    let ingredients = vec![
        Ingredient::new("E_gamma S_tau", m, sm.std_error(), Method::MonteCarlo),
        Ingredient::new("E_gamma int_0^S_tau exp(gamma y) f(-y) dy", i, var_i.sqrt(), Method::MonteCarlo),
        Ingredient::new("f-grid spacing", h0 / (1u64 << level) as f64, 0.0, Method::Exact),
    ];
    Ok((value, value * rel, ingredients))
}

/// The constant appropriate for `quantity`, routing nonnegative walks to
/// their own formula.
pub fn constant_for<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    quantity: Quantity,
    opts: &AsymOptions,
    exec: &E,
) -> Result<AsymptoticConstant> {
    let nonneg = !spec.has_negative_part();
    match quantity {
        Quantity::Tau if nonneg => const_nonneg_tau(spec, a),
        Quantity::Tau => const_tau(spec, a, opts, exec),
        Quantity::N => const_n(spec, a, opts, exec),
        Quantity::Rho => const_rho(spec, a, opts, exec),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TableRow {
    pub x: f64,
    /// `exp(-gamma x) E exp(a Q(x))`.
    pub scaled_moment: f64,
    pub scaled_se: f64,
    pub constant: f64,
    pub rel_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConvergenceTable {
    pub constant: AsymptoticConstant,
    pub rows: Vec<TableRow>,
    /// Smallest `x` from which every scaled moment lies in `[C/2, 2C]`.
    pub bounded_from: Option<f64>,
    /// Levels where `rel_gap` grew by more than its noise allowance.
    pub non_monotone: Vec<f64>,
}

/// Allowance for `rel_gap` increases attributed to rounding in exact rows.
pub const GAP_NOISE_FLOOR: f64 = 1e-9;

/// Scaled moments `exp(-gamma x) E exp(a Q(x))` against the constant. Lattice
/// `tau` and `rho` use exact series; everything else is simulated.
pub fn convergence_table<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    quantity: Quantity,
    xs: &[f64],
    opts: &AsymOptions,
    exec: &E,
) -> Result<ConvergenceTable> {
    let constant = constant_for(spec, a, quantity, opts, exec)?;
    let c = constant.value;
    let gamma = constant.gamma;
    let lattice = match constant.case {
        ConstantCase::Lattice { span } => Some(span),
        ConstantCase::NonLattice => None,
    };
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        if let Some(span) = lattice {
            let k = (x / span).round();
            if !(x >= 0.0) || (k * span - x).abs() > 1e-9 * span.max(x) {
                return Err(Error::Domain(format!("x = {x} is not in {span} N")));
            }
        }
        let (moment, se) = match (lattice, quantity) {
            (Some(_), Quantity::Tau) => (exp_moment_tau_exact(spec, constant.a, x, &opts.series)?.value, 0.0),
            (Some(_), Quantity::Rho) => (exp_moment_rho_exact(spec, constant.a, x, &opts.series)?.value, 0.0),
            (None, Quantity::Tau) => {
                let e = estimate_exp_moment_tau_tilted(spec, a, x, &opts.mc, exec)?;
                (e.mean, e.std_error)
            }
            _ => {
                let e = estimate_exp_moment_direct(spec, a, x, quantity, &opts.mc, exec)?;
                (e.mean, e.std_error)
            }
        };
        let scale = (-gamma * x).exp();
        let s = scale * moment;
        rows.push(TableRow { x, scaled_moment: s, scaled_se: scale * se, constant: c, rel_gap: (s - c).abs() / c });
    }
    let bounded_from = {
        let mut from = None;
        for r in rows.iter().rev() {
            if r.scaled_moment >= 0.5 * c && r.scaled_moment <= 2.0 * c {
                from = Some(r.x);
            } else {
                break;
            }
        }
        from
    };
    let non_monotone = rows
        .windows(2)
        .filter(|w| {
            let noise = GAP_NOISE_FLOOR + 2.0 * (w[0].scaled_se + w[1].scaled_se + constant.combined_se) / c;
            w[1].rel_gap > w[0].rel_gap + noise
        })
        .map(|w| w[1].x)
        .collect();
    Ok(ConvergenceTable { constant, rows, bounded_from, non_monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::Sequential;

    fn srw() -> IncrementSpec {
        IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap()
    }

    #[test]
    fn srw_tau_constant_is_e_gamma() {
        let c = const_tau(&srw(), 0.1, &AsymOptions::default(), &Sequential).unwrap();
        assert!((c.value - 1.205_179_543_509_171_4).abs() < 1e-11, "{c:?}");
    }

    #[test]
    fn srw_rho_constant() {
        let c = const_rho(&srw(), 0.1, &AsymOptions::default(), &Sequential).unwrap();
        assert!((c.value - 1.284_168_934_297_416).abs() < 1e-11, "{c:?}");
        let r = -(0.8f64.ln());
        assert!(const_rho(&srw(), r, &AsymOptions::default(), &Sequential).unwrap_err().is_infinite_refusal());
    }

    #[test]
    fn bernoulli_constants() {
        let spec = IncrementSpec::lattice([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let c = const_nonneg_tau(&spec, 0.3).unwrap();
        assert!((c.value - 2.076_254_855_569_4).abs() < 1e-9, "{c:?}");
        assert!(const_tau(&spec, 0.3, &AsymOptions::default(), &Sequential).is_err());
        let ladder = const_tau_ladder(&spec, 0.3, &AsymOptions::default(), &Sequential).unwrap();
        assert!((ladder.value - c.value).abs() < 1e-9);
        let n = const_n(&spec, 0.3, &AsymOptions::default(), &Sequential).unwrap();
        assert!((n.value - (-0.3f64).exp() * c.value).abs() < 1e-9);
    }

    #[test]
    fn point_mass_constant() {
        let spec = IncrementSpec::lattice([(1.0, 1.0)]).unwrap();
        let c = const_nonneg_tau(&spec, 0.2).unwrap();
        assert!((c.value - 0.2f64.exp()).abs() < 1e-12);
        let t = convergence_table(&spec, 0.2, Quantity::Tau, &[0.0, 1.0, 2.0], &AsymOptions::default(), &Sequential).unwrap();
        assert!(t.rows.iter().all(|r| r.rel_gap < 1e-12));
    }

    #[test]
    fn trapezoid_weights_integrate_exponentials() {
        // f = 1: mean of (exp(gamma s) - 1) / gamma, up to O(h^2).
        let samples = [0.3, 1.7, 2.0];
        let (g, h) = (0.4, 1e-3);
        let w = trapezoid_weights(&samples, h, g, 2003);
        let got: f64 = w.iter().sum();
        let want = samples.iter().map(|s| (g * s).exp_m1() / g).sum::<f64>() / 3.0;
        assert!((got - want).abs() < 1e-6, "{got} {want}");
    }
}
