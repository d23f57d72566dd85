//! Path simulation and Monte Carlo estimators.
//!
//! Every path owns a ChaCha8 stream: the generator is seeded once from the
//! run seed and path `i` reads stream `first_stream + i`. Paths are grouped
//! into fixed chunks of [`CHUNK_SIZE`] and chunk results are merged in index
//! order, so estimates do not depend on how an [`Executor`] schedules chunks.
//!
//! Walks with positive drift are followed until they sit a Lundberg barrier
//! `B` above the level of interest; a later return below that level has
//! probability at most `barrier_epsilon`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analyze::{classify_with, critical_data, gamma_of_with, CriticalData, Quantity};
use crate::dist::{IncrementSpec, Sampler};
use crate::error::{Error, Result};
use crate::numeric::stats::{isotonic_decreasing, Moments, PairMoments};
use crate::tilt::{tilt_spec, TiltParams};

pub const CHUNK_SIZE: u64 = 4096;
/// Simulations abort when more than this fraction of paths hit the horizon.
pub const MAX_TRUNCATED_FRACTION: f64 = 0.01;
const BARRIER_GRID: usize = 400;

/// Runs independent chunks of work, returning results in chunk order.
pub trait Executor {
    fn map_chunks<T, F>(&self, n_chunks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs chunks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_chunks<T, F>(&self, n_chunks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n_chunks).map(f).collect()
    }
}

/// Per-chunk partial result, combined in chunk order.
pub trait Accumulator: Send {
    fn merge(&mut self, other: Self);
}

impl<T: Send> Accumulator for Vec<T> {
    fn merge(&mut self, mut other: Self) {
        self.append(&mut other);
    }
}

/// Runs `n_paths` paths; `per_path` receives the path's generator and index.
pub fn run_paths<E, A, I, P>(
    exec: &E,
    seed: u64,
    first_stream: u64,
    n_paths: u64,
    init: I,
    per_path: P,
) -> A
where
    E: Executor + ?Sized,
    A: Accumulator,
    I: Fn() -> A + Sync + Send,
    P: Fn(&mut ChaCha8Rng, u64, &mut A) + Sync + Send,
{
    let n_chunks = n_paths.div_ceil(CHUNK_SIZE) as usize;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let parts = exec.map_chunks(n_chunks, |c| {
        let mut acc = init();
        let start = c as u64 * CHUNK_SIZE;
        let end = (start + CHUNK_SIZE).min(n_paths);
        for i in start..end {
            let mut rng = base.clone();
            rng.set_stream(first_stream + i);
            per_path(&mut rng, i, &mut acc);
        }
        acc
    });
    let mut out = init();
    for p in parts {
        out.merge(p);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Probability budget for a return below the level after the barrier.
    pub barrier_epsilon: f64,
    /// Steps after which a path is abandoned and counted as truncated.
    pub horizon_cap: u64,
    /// Worker threads; affects wall time only.
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, seed: 0, barrier_epsilon: 1e-6, horizon_cap: 10_000_000, workers: 1 }
    }
}

impl McConfig {
    pub fn with_paths(mut self, n_paths: u64) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Domain("n_paths must be >= 1".into()));
        }
        if !(self.barrier_epsilon > 0.0 && self.barrier_epsilon < 1.0) {
            return Err(Error::Domain(format!(
                "barrier_epsilon = {} must lie in (0, 1)",
                self.barrier_epsilon
            )));
        }
        if self.horizon_cap == 0 {
            return Err(Error::Domain("horizon_cap must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum McWarning {
    /// `2a > R`: the second moment may be infinite and the standard error
    /// meaningless.
    InfiniteVariancePossible { a: f64, r: f64 },
    /// More than `10 * barrier_epsilon` of the paths hit the horizon cap.
    TruncationAboveBudget { fraction: f64, budget: f64 },
    /// The monotone fit moved a grid value by more than two standard errors.
    IsotonicClampExceeded { y: f64, raw: f64, fitted: f64, std_error: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Paths simulated.
    pub n_paths: u64,
    /// Paths that hit the horizon cap; they are excluded from `mean`.
    pub n_truncated: u64,
    pub truncated_fraction: f64,
    pub seed: u64,
    /// Stream of the first path; path `i` used stream `first_stream + i`.
    pub first_stream: u64,
    pub warnings: Vec<McWarning>,
}

impl McEstimate {
    /// A value known without sampling error.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            n_paths: 0,
            n_truncated: 0,
            truncated_fraction: 0.0,
            seed: 0,
            first_stream: 0,
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    moments: Moments,
    truncated: u64,
}

impl Accumulator for Tally {
    fn merge(&mut self, other: Self) {
        self.moments.merge(&other.moments);
        self.truncated += other.truncated;
    }
}

fn truncation_check(config: &McConfig, n_truncated: u64, n_paths: u64) -> Result<(f64, Option<McWarning>)> {
    let fraction = n_truncated as f64 / n_paths as f64;
    if fraction > MAX_TRUNCATED_FRACTION {
        return Err(Error::Simulation(format!(
            "{n_truncated} of {n_paths} paths ({:.3}%) reached the horizon cap of {} steps",
            100.0 * fraction,
            config.horizon_cap
        )));
    }
    let budget = 10.0 * config.barrier_epsilon;
    let warning = (fraction > budget).then_some(McWarning::TruncationAboveBudget { fraction, budget });
    Ok((fraction, warning))
}

fn estimate_from(
    moments: &Moments,
    n_truncated: u64,
    config: &McConfig,
    first_stream: u64,
    n_paths: u64,
) -> Result<McEstimate> {
    let (truncated_fraction, warning) = truncation_check(config, n_truncated, n_paths)?;
    if moments.count == 0 {
        return Err(Error::Simulation("no untruncated paths".into()));
    }
    Ok(McEstimate {
        mean: moments.mean,
        std_error: moments.std_error(),
        n_paths,
        n_truncated,
        truncated_fraction,
        seed: config.seed,
        first_stream,
        warnings: warning.into_iter().collect(),
    })
}

/// One path's functionals at level `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PathFunctionals {
    /// First `n` with `S_n > x`; `0` if the path was truncated before it.
    pub tau: u64,
    /// Number of `n >= 1` with `S_n <= x`.
    pub n_visits: u64,
    /// Last `n >= 0` with `S_n <= x`.
    pub rho: u64,
    /// `S_tau`; NaN if the path was truncated before `tau`.
    pub s_tau: f64,
    pub overshoot: f64,
    /// Minimum of `S_n`, `n >= 1`, over the simulated steps.
    pub min_after_1: f64,
    pub steps: u64,
    pub truncated: bool,
}

/// Runs until `S_n > stop_level` (and `tau` has occurred), or until `tau`
/// when `stop_at_tau` is set.
fn run_path<R: Rng + ?Sized>(
    sampler: &Sampler,
    x: f64,
    stop_level: f64,
    horizon: u64,
    stop_at_tau: bool,
    rng: &mut R,
) -> PathFunctionals {
    let mut s = 0.0;
    let mut pf = PathFunctionals {
        tau: 0,
        n_visits: 0,
        rho: 0,
        s_tau: f64::NAN,
        overshoot: f64::NAN,
        min_after_1: f64::INFINITY,
        steps: 0,
        truncated: false,
    };
    let mut n = 0u64;
    loop {
        if n >= horizon {
            pf.truncated = true;
            break;
        }
        n += 1;
        s += sampler.sample(rng);
        if s < pf.min_after_1 {
            pf.min_after_1 = s;
        }
        if s <= x {
            pf.n_visits += 1;
            pf.rho = n;
        } else if pf.tau == 0 {
            pf.tau = n;
            pf.s_tau = s;
            pf.overshoot = s - x;
            if stop_at_tau {
                break;
            }
        }
        if pf.tau != 0 && s > stop_level {
            break;
        }
    }
    pf.steps = n;
    pf
}

/// Level `B` with `P{inf_{n>=1} S_n <= -B} <= epsilon`, from the union bound
/// `exp(-tB) phi(t) / (1 - phi(t))` minimized over a log grid of `t`.
pub fn lundberg_barrier(spec: &IncrementSpec, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if !spec.has_negative_part() {
        return Ok(0.0);
    }
    if spec.mean()? <= 0.0 {
        return Err(Error::Domain("non-positive drift: no t with phi(t) < 1".into()));
    }
    let t_max = spec.domain_sup();
    let t_hi = if t_max.is_finite() {
        if spec.domain_closed() {
            t_max
        } else {
            t_max * (1.0 - 1e-9)
        }
    } else {
        let mut t = 1.0;
        while spec.laplace(t)?.value() < 1.0 {
            t *= 2.0;
            if t > 1e12 {
                return Err(Error::Domain("phi stays below 1; barrier search failed".into()));
            }
        }
        t
    };
    let log_lo = (t_hi * 1e-6).ln();
    let log_hi = t_hi.ln();
    let mut best = f64::INFINITY;
    for i in 0..=BARRIER_GRID {
        let t = (log_lo + (log_hi - log_lo) * i as f64 / BARRIER_GRID as f64).exp();
        let phi = spec.laplace(t)?.value();
        if phi < 1.0 {
            let b = ((phi / (1.0 - phi)).ln() - epsilon.ln()) / t;
            best = best.min(b);
        }
    }
    if !best.is_finite() {
        return Err(Error::Domain("non-positive drift: no t with phi(t) < 1".into()));
    }
    Ok(best.max(0.0))
}

fn require_upward(cd: &CriticalData) -> Result<()> {
    if cd.nonnegative {
        if cd.beta >= 1.0 {
            return Err(Error::Domain("X = 0 almost surely: the walk never leaves 0".into()));
        }
        Ok(())
    } else if cd.has_positive_exponent() {
        Ok(())
    } else {
        Err(Error::NoPositiveExponent)
    }
}

/// Simulated functionals of a run, in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalsRun {
    pub paths: Vec<PathFunctionals>,
    pub barrier: f64,
    pub n_truncated: u64,
    pub truncated_fraction: f64,
    pub warnings: Vec<McWarning>,
}

/// Simulates `config.n_paths` paths and reads off `tau(x)`, `N(x)`, `rho(x)`.
pub fn simulate_functionals<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    x: f64,
    config: &McConfig,
    exec: &E,
) -> Result<FunctionalsRun> {
    config.validate()?;
    check_level(x)?;
    require_upward(&critical_data(spec)?)?;
    let barrier = lundberg_barrier(spec, config.barrier_epsilon)?;
    let sampler = spec.sampler()?;
    let paths: Vec<PathFunctionals> = run_paths(exec, config.seed, 0, config.n_paths, Vec::new, |rng, _, acc| {
        acc.push(run_path(&sampler, x, x + barrier, config.horizon_cap, false, rng));
    });
    let n_truncated = paths.iter().filter(|p| p.truncated).count() as u64;
    let (truncated_fraction, warning) = truncation_check(config, n_truncated, config.n_paths)?;
    Ok(FunctionalsRun { paths, barrier, n_truncated, truncated_fraction, warnings: warning.into_iter().collect() })
}

fn check_level(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("level x = {x} must be finite and >= 0")))
    }
}

fn heavy_tail_warning(a: f64, cd: &CriticalData) -> Option<McWarning> {
    (2.0 * a > cd.r).then_some(McWarning::InfiniteVariancePossible { a, r: cd.r })
}

/// Plain Monte Carlo mean of `exp(a * functional)`.
pub fn estimate_exp_moment_direct<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    x: f64,
    quantity: Quantity,
    config: &McConfig,
    exec: &E,
) -> Result<McEstimate> {
    config.validate()?;
    check_level(x)?;
    let cd = critical_data(spec)?;
    classify_with(spec, a, &cd)?.require_finite(quantity)?;
    let barrier = lundberg_barrier(spec, config.barrier_epsilon)?;
    let sampler = spec.sampler()?;
    let stop_at_tau = quantity == Quantity::Tau;
    let tally = run_paths(exec, config.seed, 0, config.n_paths, Tally::default, |rng, _, acc| {
        let pf = run_path(&sampler, x, x + barrier, config.horizon_cap, stop_at_tau, rng);
        if pf.truncated {
            acc.truncated += 1;
            return;
        }
        let k = match quantity {
            Quantity::Tau => pf.tau,
            Quantity::N => pf.n_visits,
            Quantity::Rho => pf.rho,
        };
        acc.moments.push((a * k as f64).exp());
    });
    let mut est = estimate_from(&tally.moments, tally.truncated, config, 0, config.n_paths)?;
    est.warnings.extend(heavy_tail_warning(a, &cd));
    Ok(est)
}

fn tilted_passage<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    x: f64,
    center: f64,
    config: &McConfig,
    exec: &E,
) -> Result<McEstimate> {
    config.validate()?;
    check_level(x)?;
    let cd = critical_data(spec)?;
    let tp = gamma_of_with(spec, a, &cd)?;
    let gamma = tp.gamma();
    let sampler = tilt_spec(spec, &tp)?.sampler()?;
    let tally = run_paths(exec, config.seed, 0, config.n_paths, Tally::default, |rng, _, acc| {
        let pf = run_path(&sampler, x, x, config.horizon_cap, true, rng);
        if pf.truncated {
            acc.truncated += 1;
        } else {
            acc.moments.push((gamma * (pf.s_tau - center)).exp());
        }
    });
    estimate_from(&tally.moments, tally.truncated, config, 0, config.n_paths)
}

/// `E exp(a tau(x))` as `E_gamma exp(gamma S_tau(x))`, simulated under the
/// tilted law, where `tau(x)` is finite almost surely even at `a = R`.
pub fn estimate_exp_moment_tau_tilted<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    x: f64,
    config: &McConfig,
    exec: &E,
) -> Result<McEstimate> {
    tilted_passage(spec, a, x, 0.0, config, exec)
}

/// `E_gamma exp(gamma R_x)` for the overshoot `R_x = S_tau(x) - x`.
pub fn estimate_exp_overshoot_tilted<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    x: f64,
    config: &McConfig,
    exec: &E,
) -> Result<McEstimate> {
    tilted_passage(spec, a, x, x, config, exec)
}

/// Ladder heights `S_tau` under `P_gamma`, in path order; `None` for paths
/// truncated before `tau`.
pub(crate) fn ladder_heights<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    tp: &TiltParams,
    config: &McConfig,
    first_stream: u64,
    exec: &E,
) -> Result<Vec<Option<f64>>> {
    let sampler = tilt_spec(spec, tp)?.sampler()?;
    Ok(run_paths(exec, config.seed, first_stream, config.n_paths, Vec::new, |rng, _, acc| {
        let pf = run_path(&sampler, 0.0, 0.0, config.horizon_cap, true, rng);
        acc.push((!pf.truncated).then_some(pf.s_tau));
    }))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LadderEstimates {
    pub tilt: TiltParams,
    /// `E_gamma S_tau`.
    pub e_gamma_s_tau: McEstimate,
    /// `E exp(a tau) = E_gamma exp(gamma S_tau)`.
    pub e_exp_a_tau: McEstimate,
    /// Covariance of the two sample means.
    pub covariance: f64,
}

pub(crate) fn ladder_from_samples(
    tp: &TiltParams,
    samples: &[Option<f64>],
    config: &McConfig,
    first_stream: u64,
) -> Result<LadderEstimates> {
    let mut pm = PairMoments::default();
    for s in samples.iter().flatten() {
        pm.push(*s, (tp.gamma() * s).exp());
    }
    let n_truncated = samples.iter().filter(|s| s.is_none()).count() as u64;
    let n = samples.len() as u64;
    let e_gamma_s_tau = estimate_from(&pm.x, n_truncated, config, first_stream, n)?;
    let e_exp_a_tau = estimate_from(&pm.y, n_truncated, config, first_stream, n)?;
    Ok(LadderEstimates {
        tilt: *tp,
        e_gamma_s_tau,
        e_exp_a_tau,
        covariance: pm.covariance() / pm.x.count as f64,
    })
}

/// Mean ladder height under `P_gamma` and the companion `E exp(a tau)`.
pub fn estimate_ladder_quantities<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    config: &McConfig,
    exec: &E,
) -> Result<LadderEstimates> {
    config.validate()?;
    let tp = gamma_of_with(spec, a, &critical_data(spec)?)?;
    let samples = ladder_heights(spec, &tp, config, 0, exec)?;
    ladder_from_samples(&tp, &samples, config, 0)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MinEstimates {
    /// `E exp(-gamma M+)` for `M = inf_{n>=1} S_n`.
    pub exp_neg_gamma_mplus: McEstimate,
    /// `P{M > 0}`.
    pub p_m_positive: McEstimate,
}

#[derive(Debug, Clone, Copy, Default)]
struct MinTally {
    exp: Moments,
    positive: Moments,
    truncated: u64,
}

impl Accumulator for MinTally {
    fn merge(&mut self, other: Self) {
        self.exp.merge(&other.exp);
        self.positive.merge(&other.positive);
        self.truncated += other.truncated;
    }
}

/// Moments of the overall minimum `M = inf_{n>=1} S_n`. A path stops once its
/// running minimum is `<= 0`, or once it is `B` above its running minimum.
pub fn estimate_min_functionals<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    gamma: f64,
    config: &McConfig,
    exec: &E,
) -> Result<MinEstimates> {
    config.validate()?;
    require_upward(&critical_data(spec)?)?;
    let barrier = lundberg_barrier(spec, config.barrier_epsilon)?;
    let sampler = spec.sampler()?;
    let tally = run_paths(exec, config.seed, 0, config.n_paths, MinTally::default, |rng, _, acc| {
        let mut s = 0.0;
        let mut min = f64::INFINITY;
        let mut n = 0u64;
        loop {
            if n >= config.horizon_cap {
                acc.truncated += 1;
                return;
            }
            n += 1;
            s += sampler.sample(rng);
            min = min.min(s);
            if min <= 0.0 || s - min >= barrier {
                break;
            }
        }
        let m_plus = min.max(0.0);
        acc.exp.push((-gamma * m_plus).exp());
        acc.positive.push(if min > 0.0 { 1.0 } else { 0.0 });
    });
    Ok(MinEstimates {
        exp_neg_gamma_mplus: estimate_from(&tally.exp, tally.truncated, config, 0, config.n_paths)?,
        p_m_positive: estimate_from(&tally.positive, tally.truncated, config, 0, config.n_paths)?,
    })
}

/// Visit counts `N(-y_j) = #{n >= 1 : S_n <= -y_j}` for an increasing grid
/// `ys`, simulated under the original law. `per_path` receives the counts
/// for the leading grid points; all later counts are zero. Returns the
/// accumulator and the number of truncated paths.
pub(crate) fn simulate_visit_counts<E, A, I, P>(
    spec: &IncrementSpec,
    ys: &[f64],
    config: &McConfig,
    first_stream: u64,
    exec: &E,
    init: I,
    per_path: P,
) -> Result<(A, u64)>
where
    E: Executor + ?Sized,
    A: Accumulator,
    I: Fn() -> A + Sync + Send,
    P: Fn(&[u64], &mut A) + Sync + Send,
{
    struct WithTruncation<A> {
        inner: A,
        truncated: u64,
    }
    impl<A: Accumulator> Accumulator for WithTruncation<A> {
        fn merge(&mut self, other: Self) {
            self.inner.merge(other.inner);
            self.truncated += other.truncated;
        }
    }

    if ys.windows(2).any(|w| !(w[0] < w[1])) || ys.first().is_some_and(|&y| y < 0.0) {
        return Err(Error::Domain("y grid must be nonnegative and strictly increasing".into()));
    }
    let barrier = lundberg_barrier(spec, config.barrier_epsilon)?;
    let sampler = spec.sampler()?;
    let g = ys.len();
    let out = run_paths(
        exec,
        config.seed,
        first_stream,
        config.n_paths,
        || WithTruncation { inner: init(), truncated: 0 },
        |rng, _, acc| {
            // diff[j] counts visits whose deepest covered grid point is y_j.
            let mut diff: Vec<u64> = Vec::new();
            let mut s = 0.0;
            let mut n = 0u64;
            loop {
                if n >= config.horizon_cap {
                    acc.truncated += 1;
                    return;
                }
                n += 1;
                s += sampler.sample(rng);
                if s <= 0.0 {
                    let idx = ys.partition_point(|&y| y <= -s);
                    if idx > diff.len() {
                        diff.resize(idx, 0);
                    }
                    if idx > 0 {
                        diff[idx - 1] += 1;
                    }
                }
                if s > barrier {
                    break;
                }
            }
            // Suffix sums turn "deepest grid index reached" into counts.
            for j in (0..diff.len().saturating_sub(1)).rev() {
                diff[j] += diff[j + 1];
            }
            debug_assert!(diff.len() <= g);
            per_path(&diff, &mut acc.inner);
        },
    );
    Ok((out.inner, out.truncated))
}

/// `f(-y) = E exp(a N(-y))` on a grid, with its monotone (non-increasing) fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FGrid {
    pub ys: Vec<f64>,
    /// Isotonic fit of `raw`.
    pub values: Vec<f64>,
    pub raw: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_paths: u64,
    pub n_truncated: u64,
    pub clamp_exceeded: bool,
    pub warnings: Vec<McWarning>,
}

#[derive(Debug, Clone, Default)]
struct GridSums {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Accumulator for GridSums {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.s1.iter_mut().zip(other.s1) {
            *a += b;
        }
        for (a, b) in self.s2.iter_mut().zip(other.s2) {
            *a += b;
        }
    }
}

/// Direct Monte Carlo of `E exp(a N(-y))` for every `y` in `ys`, with
/// common random numbers across the grid.
pub fn estimate_f_grid<E: Executor + ?Sized>(
    spec: &IncrementSpec,
    a: f64,
    ys: &[f64],
    config: &McConfig,
    exec: &E,
) -> Result<FGrid> {
    config.validate()?;
    let cd = critical_data(spec)?;
    classify_with(spec, a, &cd)?.require_finite(Quantity::N)?;
    require_upward(&cd)?;
    let g = ys.len();
    let (sums, n_truncated) = simulate_visit_counts(
        spec,
        ys,
        config,
        0,
        exec,
        || GridSums { s1: vec![0.0; g], s2: vec![0.0; g] },
        |counts, acc| {
            for (j, &c) in counts.iter().enumerate() {
                if c > 0 {
                    let v = (a * c as f64).exp_m1();
                    acc.s1[j] += v;
                    acc.s2[j] += v * v;
                }
            }
        },
    )?;
    let (_, warning) = truncation_check(config, n_truncated, config.n_paths)?;
    let n = (config.n_paths - n_truncated) as f64;
    if n < 2.0 {
        return Err(Error::Simulation("fewer than two untruncated paths".into()));
    }
    let mut raw = Vec::with_capacity(g);
    let mut std_errors = Vec::with_capacity(g);
    for j in 0..g {
        let m = sums.s1[j] / n;
        let var = ((sums.s2[j] - n * m * m) / (n - 1.0)).max(0.0);
        raw.push(1.0 + m);
        std_errors.push((var / n).sqrt());
    }
    let values = isotonic_decreasing(&raw);
    let mut warnings: Vec<McWarning> = warning.into_iter().collect();
    warnings.extend(heavy_tail_warning(a, &cd));
    let mut clamp_exceeded = false;
    for j in 0..g {
        if (values[j] - raw[j]).abs() > 2.0 * std_errors[j] && values[j] != raw[j] {
            clamp_exceeded = true;
            warnings.push(McWarning::IsotonicClampExceeded {
                y: ys[j],
                raw: raw[j],
                fitted: values[j],
                std_error: std_errors[j],
            });
        }
    }
    Ok(FGrid {
        ys: ys.to_vec(),
        values,
        raw,
        std_errors,
        n_paths: config.n_paths,
        n_truncated,
        clamp_exceeded,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srw() -> IncrementSpec {
        IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap()
    }

    #[test]
    fn deterministic_walk_functionals() {
        let spec = IncrementSpec::lattice([(1.0, 1.0)]).unwrap();
        let cfg = McConfig::default().with_paths(10);
        let run = simulate_functionals(&spec, 3.5, &cfg, &Sequential).unwrap();
        for p in run.paths {
            assert_eq!((p.tau, p.n_visits, p.rho), (4, 3, 3));
            assert_eq!(p.s_tau, 4.0);
            assert_eq!(p.overshoot, 0.5);
        }
        let est = estimate_exp_moment_direct(&spec, 0.2, 3.5, Quantity::Tau, &cfg, &Sequential).unwrap();
        assert_eq!(est.mean, 0.8f64.exp());
        assert_eq!(est.std_error, 0.0);
        let tilted = estimate_exp_moment_tau_tilted(&spec, 0.2, 3.5, &cfg, &Sequential).unwrap();
        assert!((tilted.mean - 0.8f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn barrier_values() {
        assert_eq!(lundberg_barrier(&IncrementSpec::lattice([(1.0, 1.0)]).unwrap(), 1e-6).unwrap(), 0.0);
        let b = lundberg_barrier(&srw(), 1e-6).unwrap();
        assert!(b > 5.0 && b <= 15.0, "{b}");
        let neg = IncrementSpec::lattice([(1.0, 0.3), (-1.0, 0.7)]).unwrap();
        assert!(lundberg_barrier(&neg, 1e-6).is_err());
    }

    #[test]
    fn results_do_not_depend_on_chunking_order() {
        struct Reversed;
        impl Executor for Reversed {
            fn map_chunks<T, F>(&self, n: usize, f: F) -> Vec<T>
            where
                T: Send,
                F: Fn(usize) -> T + Sync + Send,
            {
                let mut out: Vec<(usize, T)> = (0..n).rev().map(|c| (c, f(c))).collect();
                out.sort_by_key(|p| p.0);
                out.into_iter().map(|p| p.1).collect()
            }
        }
        let cfg = McConfig::default().with_paths(10_000).with_seed(3);
        let a = estimate_exp_moment_direct(&srw(), 0.1, 0.0, Quantity::Rho, &cfg, &Sequential).unwrap();
        let b = estimate_exp_moment_direct(&srw(), 0.1, 0.0, Quantity::Rho, &cfg, &Reversed).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn srw_min_functionals() {
        let cfg = McConfig::default().with_paths(20_000).with_seed(11);
        let g = 0.186_628_554_606_203_23;
        let m = estimate_min_functionals(&srw(), g, &cfg, &Sequential).unwrap();
        let p = m.p_m_positive;
        assert!((p.mean - 0.6).abs() < 4.0 * p.std_error, "{p:?}");
        let want = 0.4 + 0.6 * (-g).exp();
        let e = m.exp_neg_gamma_mplus;
        assert!((e.mean - want).abs() < 4.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn refusals_cite_the_criterion() {
        let cfg = McConfig::default().with_paths(10);
        let r = -(0.8f64.ln());
        let err = estimate_exp_moment_direct(&srw(), r, 0.0, Quantity::Rho, &cfg, &Sequential).unwrap_err();
        assert!(err.is_infinite_refusal());
    }

    #[test]
    fn f_grid_is_monotone_and_tends_to_one() {
        let cfg = McConfig::default().with_paths(20_000).with_seed(5);
        let ys: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let f = estimate_f_grid(&srw(), 0.1, &ys, &cfg, &Sequential).unwrap();
        assert!(f.values.windows(2).all(|w| w[0] >= w[1]));
        assert!((f.values[29] - 1.0).abs() < 1e-9);
        assert!(f.values[0] > 1.0);
    }
}
