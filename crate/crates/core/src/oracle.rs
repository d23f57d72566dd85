//! Closed-form reference values for three increment laws with explicit
//! fluctuation theory: the simple random walk, the difference of two
//! exponentials, and a shifted two-sided heavy law whose transform attains
//! its minimum at the edge of its domain.
//!
//! Pmf series are summed term by term with binomial coefficients carried in
//! log space. Divergence at the critical exponent is read off the log-log
//! slope of the terms over the last decade.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::dist::IncrementSpec;
use crate::error::{Error, Result};
use crate::numeric::stats::loglog_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Example {
    SimpleRandomWalk,
    ExpDifference,
    BoundaryTilt,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OracleValue {
    pub name: String,
    pub value: f64,
    pub formula: &'static str,
}

/// `points[i] = (n, P{Q = n})`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OracleTable {
    pub name: String,
    pub formula: &'static str,
    pub points: Vec<(u64, f64)>,
}

impl OracleTable {
    pub fn total(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }
}

/// `sum_n exp(a n) P{Q = n}` over a pmf table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OracleSeries {
    pub name: String,
    pub formula: &'static str,
    /// Partial sum plus the tail estimate; infinite when diverged.
    pub value: f64,
    pub partial_sum: f64,
    /// Geometric bound below the critical exponent, power-law extrapolation at it.
    pub tail: f64,
    pub n_terms: usize,
    /// Log-log slope of the terms in `n` over the last decade.
    pub fitted_exponent: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OracleReport {
    pub example: Example,
    pub values: Vec<OracleValue>,
    pub tables: Vec<OracleTable>,
    pub series: Vec<OracleSeries>,
    pub assumptions: Vec<String>,
}

impl OracleReport {
    fn new(example: Example) -> Self {
        Self { example, values: Vec::new(), tables: Vec::new(), series: Vec::new(), assumptions: Vec::new() }
    }

    fn value(&mut self, name: &str, value: f64, formula: &'static str) {
        self.values.push(OracleValue { name: name.into(), value, formula });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value)
    }

    pub fn table(&self, name: &str) -> Option<&OracleTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&OracleSeries> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Sums `exp(log_terms[i])` where successive term ratios are at most `ratio`
/// (below one) or follow a power law.
fn sum_series(name: &str, formula: &'static str, ns: &[u64], log_terms: &[f64], ratio: f64) -> OracleSeries {
    let partial_sum: f64 = log_terms.iter().map(|l| l.exp()).sum();
    let n = log_terms.len();
    let fitted_exponent = if n >= 20 {
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .zip(log_terms)
            .skip(n - n / 10 - 1)
            .filter(|(&k, _)| k > 0)
            .map(|(&k, &l)| (k as f64, l.exp()))
            .collect();
        loglog_fit(&pts).map(|(slope, _)| slope)
    } else {
        None
    };
    let diverged = fitted_exponent.is_some_and(|s| s > -1.0);
    let last = log_terms.last().map_or(0.0, |l| l.exp());
    let tail = if diverged {
        f64::INFINITY
    } else if ratio < 1.0 - 1e-9 {
        last * ratio / (1.0 - ratio)
    } else {
        // Terms ~ c m^s at m = ns[i] spaced d apart: the tail sums to about
        // (m_N / d) t_N / (-s - 1).
        let s = fitted_exponent.unwrap_or(f64::NEG_INFINITY);
        let m_last = *ns.last().unwrap_or(&0) as f64;
        let d = if n >= 2 { (ns[n - 1] - ns[n - 2]) as f64 } else { 1.0 };
        if s < -1.0 { last * (m_last / d) / (-s - 1.0) } else { f64::INFINITY }
    };
    let value = if diverged { f64::INFINITY } else { partial_sum + tail };
    OracleSeries { name: name.into(), formula, value, partial_sum, tail, n_terms: n, fitted_exponent, diverged }
}

fn check_a(a: f64, r: f64) -> Result<()> {
    if !(a <= r + 1e-12 * r.max(1.0)) {
        return Err(Error::Domain(format!("a = {a} exceeds the critical exponent R = {r}")));
    }
    Ok(())
}

/// `log C(2n, n)` for `n = 0..=n_max`, by the ratio recursion.
fn log_central_binomials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut l = 0.0;
    out.push(l);
    for n in 0..n_max {
        let k = n as f64;
        l += ((2.0 * k + 1.0) * (2.0 * k + 2.0) / ((k + 1.0) * (k + 1.0))).ln();
        out.push(l);
    }
    out
}

/// Simple random walk with `P{X = 1} = p`, `P{X = -1} = 1 - p`.
pub fn srw_oracle(p: f64, a: f64, n_max: usize) -> Result<OracleReport> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} must lie in (1/2, 1)")));
    }
    if n_max < 1 {
        return Err(Error::Domain("n_max must be positive".into()));
    }
    let q = 1.0 - p;
    let r = -(2.0 * (p * q).sqrt()).ln();
    check_a(a, r)?;
    let mut rep = OracleReport::new(Example::SimpleRandomWalk);
    rep.assumptions.push(format!("1/2 < p = {p} < 1"));
    rep.assumptions.push(format!("a = {a} <= R"));
    rep.value("R", r, "R = -log(2 sqrt(p q))");
    rep.value("gamma0", 0.5 * (p / q).ln(), "gamma0 = log(p/q) / 2");
    rep.value("p", p, "P{X = 1}");
    rep.value("a", a, "exponent");

    let lc = log_central_binomials(n_max);
    let lpq = (p * q).ln();
    // P{tau = 2n - 1} = C(2n,n) / (2q 4^n (2n - 1)) (2 sqrt(pq))^{2n}, n >= 1.
    let tau: Vec<(u64, f64)> = (1..=n_max)
        .map(|n| {
            let k = n as f64;
            let l = lc[n] - (2.0 * q).ln() - (2.0 * k - 1.0).ln() + k * lpq;
            ((2 * n - 1) as u64, l)
        })
        .collect();
    // P{rho = 2n} = (p - q) C(2n,n) (pq)^n, n >= 0.
    let rho: Vec<(u64, f64)> = (0..=n_max)
        .map(|n| ((2 * n) as u64, (p - q).ln() + lc[n] + n as f64 * lpq))
        .collect();
    let ratio = 4.0 * p * q * (2.0 * a).exp();
    for (name, formula, table, mfm) in [
        ("tau_pmf", "P{tau=2n-1} = C(2n,n)(pq)^n / (2q (2n-1))", &tau, "E exp(a tau) = sum_n exp(a(2n-1)) P{tau=2n-1}"),
        ("rho_pmf", "P{rho=2n} = (p-q) C(2n,n) (pq)^n", &rho, "E exp(a rho) = sum_n exp(2an) P{rho=2n}"),
    ] {
        let ns: Vec<u64> = table.iter().map(|t| t.0).collect();
        let log_terms: Vec<f64> = table.iter().map(|&(n, l)| l + a * n as f64).collect();
        let moment = if name == "tau_pmf" { "exp_a_tau" } else { "exp_a_rho" };
        rep.series.push(sum_series(moment, mfm, &ns, &log_terms, ratio));
        rep.tables.push(OracleTable {
            name: name.into(),
            formula,
            points: table.iter().map(|&(n, l)| (n, l.exp())).collect(),
        });
    }
    Ok(rep)
}

/// `X = Y1 - Y2` with `Y1 ~ Exp(alpha)`, `Y2 ~ Exp(kappa)`, `alpha < kappa`.
pub fn expdiff_oracle(alpha: f64, kappa: f64, a: f64, n_max: usize) -> Result<OracleReport> {
    if !(alpha > 0.0 && alpha < kappa && kappa.is_finite()) {
        return Err(Error::Domain(format!("need 0 < alpha < kappa, got alpha = {alpha}, kappa = {kappa}")));
    }
    if n_max < 1 {
        return Err(Error::Domain("n_max must be positive".into()));
    }
    let sum = alpha + kappa;
    let r = -(4.0 * alpha * kappa / (sum * sum)).ln();
    check_a(a, r)?;
    let mut rep = OracleReport::new(Example::ExpDifference);
    rep.assumptions.push(format!("0 < alpha = {alpha} < kappa = {kappa}"));
    rep.assumptions.push(format!("a = {a} <= R"));
    rep.value("R", r, "R = -log(4 alpha kappa / (alpha + kappa)^2)");
    rep.value("gamma0", 0.5 * (kappa - alpha), "gamma0 = (kappa - alpha) / 2");
    rep.value("a", a, "exponent");
    let disc = (sum * sum - 4.0 * alpha * kappa * a.exp()).max(0.0);
    rep.value(
        "exp_a_tau",
        (sum - disc.sqrt()) / (2.0 * alpha),
        "E exp(a tau) = (alpha + kappa - sqrt((alpha + kappa)^2 - 4 alpha kappa exp(a))) / (2 alpha)",
    );

    // P{rho = n} = (kappa - alpha) alpha^n kappa^{n-1} C(2n-1, n) / (alpha + kappa)^{2n}, n >= 1.
    let lc = log_central_binomials(n_max);
    let mut log_pmf = Vec::with_capacity(n_max + 1);
    log_pmf.push(((kappa - alpha) / kappa).ln());
    for (n, &c2n) in lc.iter().enumerate().skip(1) {
        let k = n as f64;
        // C(2n-1, n) = C(2n, n) / 2.
        let l = (kappa - alpha).ln() + k * alpha.ln() + (k - 1.0) * kappa.ln() + c2n - 2.0.ln() - 2.0 * k * sum.ln();
        log_pmf.push(l);
    }
    let ns: Vec<u64> = (0..=n_max as u64).collect();
    let log_terms: Vec<f64> = log_pmf.iter().enumerate().map(|(n, l)| l + a * n as f64).collect();
    let ratio = 4.0 * alpha * kappa * a.exp() / (sum * sum);
    rep.series.push(sum_series("exp_a_rho", "E exp(a rho) = sum_n exp(a n) P{rho=n}", &ns, &log_terms, ratio));
    rep.tables.push(OracleTable {
        name: "rho_pmf".into(),
        formula: "P{rho=n} = (kappa-alpha) alpha^n kappa^(n-1) C(2n-1,n) / (alpha+kappa)^(2n); P{rho=0} = (kappa-alpha)/kappa",
        points: log_pmf.iter().enumerate().map(|(n, l)| (n as u64, l.exp())).collect(),
    });
    Ok(rep)
}

/// Builds `X = s + Y` with `Y` of density proportional to
/// `exp(-h|y|) / (1 + |y|^r)` and `s = psi'(h) / psi(h) + margin`, where
/// `psi` is the transform of `Y`. Then `phi'(h) < 0` at the domain edge `h`.
pub fn example3_construct(h: f64, r: f64, margin: f64) -> Result<(IncrementSpec, OracleReport)> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::Domain(format!("margin = {margin} must be finite and > 0")));
    }
    let base = IncrementSpec::shifted_heavy_exp(h, r, 0.0)?;
    let psi = base.laplace(h)?.value();
    let psi_prime = base.laplace_left_derivative(h)?;
    let s = psi_prime / psi + margin;
    let spec = IncrementSpec::shifted_heavy_exp(h, r, s)?;
    let phi_h = (-s * h).exp() * psi;
    let phi_prime_h = (-s * h).exp() * (psi_prime - s * psi);

    let mut rep = OracleReport::new(Example::BoundaryTilt);
    rep.assumptions.push(format!("h = {h} > 0, r = {r} > 2, margin = {margin} > 0"));
    rep.value("psi_h", psi, "psi(h) = E exp(-h Y)");
    rep.value("psi_prime_h", psi_prime, "psi'(h) = -E Y exp(-h Y)");
    rep.value("s", s, "s = psi'(h) / psi(h) + margin");
    rep.value("phi_prime_h", phi_prime_h, "phi'(h) = exp(-s h) (psi'(h) - s psi(h))");
    rep.value("gamma0", h, "gamma0 = h");
    rep.value("R", -phi_h.ln(), "R = -log phi(h) = s h - log psi(h)");
    rep.value("e_x_exp_neg_gamma0_x", -phi_prime_h, "E X exp(-gamma0 X) = -phi'(h)");
    Ok((spec, rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::{classify, critical_data, Quantity, Verdict};

    #[test]
    fn srw_values() {
        let rep = srw_oracle(0.8, 0.1, 10_000).unwrap();
        assert!((rep.get("R").unwrap() + 0.8f64.ln()).abs() < 1e-15);
        assert!((rep.get("gamma0").unwrap() - 2f64.ln()).abs() < 1e-15);
        let rho = rep.series("exp_a_rho").unwrap();
        let closed = 0.6 / (1.0 - 0.64 * 0.2f64.exp()).sqrt();
        assert!((rho.value - closed).abs() < 1e-12, "{rho:?}");
        assert!((rho.value - 1.284_168_934_297_415_6).abs() < 1e-12);
        let tau = rep.series("exp_a_tau").unwrap();
        assert!((tau.value - 1.205_179_543_509_171_4).abs() < 1e-12);
        let t = rep.table("tau_pmf").unwrap().total();
        assert!(t <= 1.0 + 1e-12 && t > 1.0 - 1e-12);
    }

    #[test]
    fn srw_pmf_mass_grows_towards_one() {
        let small = srw_oracle(0.6, 0.0, 10).unwrap();
        let big = srw_oracle(0.6, 0.0, 2_000).unwrap();
        for name in ["tau_pmf", "rho_pmf"] {
            let (s, b) = (small.table(name).unwrap().total(), big.table(name).unwrap().total());
            assert!(s < b && b <= 1.0 + 1e-12 && b > 1.0 - 1e-9, "{name}: {s} {b}");
        }
    }

    #[test]
    fn srw_at_critical_exponent() {
        let r = -(0.8f64.ln());
        let rep = srw_oracle(0.8, r, 100_000).unwrap();
        let rho = rep.series("exp_a_rho").unwrap();
        assert!(rho.diverged);
        assert!((rho.fitted_exponent.unwrap() + 0.5).abs() < 0.01);
        let tau = rep.series("exp_a_tau").unwrap();
        assert!(!tau.diverged);
        assert!((tau.value - 2.0).abs() < 1e-3, "{tau:?}");
        assert!(srw_oracle(0.8, r + 0.01, 10).is_err());
    }

    #[test]
    fn expdiff_values() {
        let r = (9.0f64 / 8.0).ln();
        let rep = expdiff_oracle(1.0, 2.0, r, 100_000).unwrap();
        assert!((rep.get("R").unwrap() - r).abs() < 1e-15);
        assert!((rep.get("exp_a_tau").unwrap() - 1.5).abs() < 1e-7);
        let pmf = rep.table("rho_pmf").unwrap();
        assert!((pmf.points[0].1 - 0.5).abs() < 1e-15);
        assert!((pmf.points[1].1 - 1.0 / 9.0).abs() < 1e-15);
        assert!(rep.series("exp_a_rho").unwrap().diverged);

        let rep = expdiff_oracle(1.0, 2.0, 0.05, 10_000).unwrap();
        let s = rep.series("exp_a_rho").unwrap();
        assert!((s.value - 1.226_556_515_589_887_7).abs() < 1e-12, "{s:?}");
        assert!((rep.table("rho_pmf").unwrap().total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracles_agree_with_critical_data() {
        let spec = IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)]).unwrap();
        let cd = critical_data(&spec).unwrap();
        let rep = srw_oracle(0.8, 0.0, 10).unwrap();
        assert!((cd.r - rep.get("R").unwrap()).abs() < 1e-9);
        assert!((cd.gamma0.unwrap() - rep.get("gamma0").unwrap()).abs() < 1e-9);

        let spec = IncrementSpec::exp_difference(1.0, 2.0).unwrap();
        let cd = critical_data(&spec).unwrap();
        let rep = expdiff_oracle(1.0, 2.0, 0.0, 10).unwrap();
        assert!((cd.r - rep.get("R").unwrap()).abs() < 1e-9);
        assert!((cd.gamma0.unwrap() - rep.get("gamma0").unwrap()).abs() < 1e-9);
    }

    #[test]
    fn boundary_construction() {
        let (spec, rep) = example3_construct(1.0, 3.0, 1.0).unwrap();
        assert!(rep.get("phi_prime_h").unwrap() < 0.0);
        let cd = critical_data(&spec).unwrap();
        assert!(cd.boundary);
        assert!((cd.gamma0.unwrap() - 1.0).abs() < 1e-9);
        assert!((cd.r - rep.get("R").unwrap()).abs() < 1e-9);
        let c = classify(&spec, cd.r).unwrap();
        assert_eq!(c.verdict(Quantity::Rho).verdict, Verdict::Finite);
        assert!(example3_construct(1.0, 3.0, 0.0).is_err());
    }
}
