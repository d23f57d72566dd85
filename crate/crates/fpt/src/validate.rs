//! Runs the closed-form reference walks against the general pipelines.

use fpt_core::analyze::{classify, critical_data};
use fpt_core::exact::{exp_moment_rho_exact, exp_moment_tau_exact, v_of, SeriesOptions};
use fpt_core::oracle::{example3_construct, expdiff_oracle, srw_oracle};
use fpt_core::walk::{estimate_exp_moment_direct, estimate_exp_moment_tau_tilted, Executor};
use fpt_core::{IncrementSpec, McConfig, McEstimate, Quantity};
use serde::Serialize;

use crate::error::CliError;
use crate::report::{num, Artifact, Table};

/// MC checks pass within this many standard errors.
pub const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub oracle: &'static str,
    pub check: &'static str,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

struct Checks(Vec<Check>);

impl Checks {
    fn close(&mut self, oracle: &'static str, check: &'static str, expected: f64, observed: f64, tolerance: f64) {
        let pass = (expected - observed).abs() <= tolerance;
        self.0.push(Check { oracle, check, expected, observed, tolerance, pass });
    }

    fn relative(&mut self, oracle: &'static str, check: &'static str, expected: f64, observed: f64, rel: f64) {
        self.close(oracle, check, expected, observed, rel * expected.abs());
    }

    fn mc(&mut self, oracle: &'static str, check: &'static str, expected: f64, est: &McEstimate) {
        self.close(oracle, check, expected, est.mean, MC_SIGMAS * est.std_error);
    }

    fn flag(&mut self, oracle: &'static str, check: &'static str, expected: bool, observed: bool) {
        let f = |b: bool| if b { 1.0 } else { 0.0 };
        self.close(oracle, check, f(expected), f(observed), 0.0);
    }
}

pub fn run<E: Executor + ?Sized>(mc: &McConfig, exec: &E) -> Result<(Vec<Check>, bool), CliError> {
    let mut c = Checks(Vec::new());
    let series = SeriesOptions::default();

    // Simple random walk, p = 0.8.
    let o = "simple_random_walk";
    let spec = IncrementSpec::lattice([(1.0, 0.8), (-1.0, 0.2)])?;
    let cd = critical_data(&spec)?;
    let rep = srw_oracle(0.8, 0.1, 20_000)?;
    c.close(o, "R", rep.get("R").unwrap_or(f64::NAN), cd.r, 1e-9);
    c.close(o, "gamma0", rep.get("gamma0").unwrap_or(f64::NAN), cd.gamma0.unwrap_or(f64::NAN), 1e-9);
    let tau = exp_moment_tau_exact(&spec, 0.1, 0.0, &series)?;
    c.relative(o, "E exp(a tau), a=0.1, exact series", series_value(&rep, "exp_a_tau"), tau.value, 1e-9);
    let rho = exp_moment_rho_exact(&spec, 0.1, 0.0, &series)?;
    c.relative(o, "E exp(a rho), a=0.1, exact series", series_value(&rep, "exp_a_rho"), rho.value, 1e-9);
    let est = estimate_exp_moment_direct(&spec, 0.1, 0.0, Quantity::Rho, mc, exec)?;
    c.mc(o, "E exp(a rho), a=0.1, direct MC", series_value(&rep, "exp_a_rho"), &est);
    let rep_r = srw_oracle(0.8, cd.r, 100_000)?;
    let tau_r = exp_moment_tau_exact(&spec, cd.r, 0.0, &SeriesOptions { rel_tol: 1e-6, max_terms: 20_000 })?;
    c.relative(o, "E exp(R tau), exact series", series_value(&rep_r, "exp_a_tau"), tau_r.value, 1e-3);
    let v_r = v_of(&spec, cd.r, 0.0, &series)?;
    let oracle_div = rep_r.series("exp_a_rho").is_some_and(|s| s.diverged);
    c.flag(o, "E exp(R rho) diverges, oracle vs series", oracle_div, v_r.diverged);
    c.flag(o, "E exp(R rho) diverges, oracle vs classify", oracle_div, !classify(&spec, cd.r)?.is_finite(Quantity::Rho));

    // Difference of exponentials, alpha = 1, kappa = 2.
    let o = "exp_difference";
    let spec = IncrementSpec::exp_difference(1.0, 2.0)?;
    let cd = critical_data(&spec)?;
    let rep = expdiff_oracle(1.0, 2.0, 0.05, 20_000)?;
    c.close(o, "R", rep.get("R").unwrap_or(f64::NAN), cd.r, 1e-9);
    c.close(o, "gamma0", rep.get("gamma0").unwrap_or(f64::NAN), cd.gamma0.unwrap_or(f64::NAN), 1e-9);
    let est = estimate_exp_moment_tau_tilted(&spec, 0.05, 0.0, mc, exec)?;
    c.mc(o, "E exp(a tau), a=0.05, tilted MC", rep.get("exp_a_tau").unwrap_or(f64::NAN), &est);
    let est = estimate_exp_moment_direct(&spec, 0.05, 0.0, Quantity::Rho, mc, exec)?;
    c.mc(o, "E exp(a rho), a=0.05, direct MC", series_value(&rep, "exp_a_rho"), &est);
    let rep_r = expdiff_oracle(1.0, 2.0, cd.r, 100_000)?;
    let est = estimate_exp_moment_tau_tilted(&spec, cd.r, 0.0, mc, exec)?;
    c.mc(o, "E exp(R tau), tilted MC", rep_r.get("exp_a_tau").unwrap_or(f64::NAN), &est);
    let oracle_div = rep_r.series("exp_a_rho").is_some_and(|s| s.diverged);
    c.flag(o, "E exp(R rho) diverges, oracle vs classify", oracle_div, !classify(&spec, cd.r)?.is_finite(Quantity::Rho));

    // Shifted heavy law with the minimum at the domain edge.
    let o = "boundary_tilt";
    let (spec, rep) = example3_construct(1.0, 3.0, 1.0)?;
    let cd = critical_data(&spec)?;
    c.flag(o, "boundary", true, cd.boundary);
    c.close(o, "gamma0", rep.get("gamma0").unwrap_or(f64::NAN), cd.gamma0.unwrap_or(f64::NAN), 1e-9);
    c.close(o, "R", rep.get("R").unwrap_or(f64::NAN), cd.r, 1e-9);
    c.relative(
        o,
        "phi'(h)",
        rep.get("phi_prime_h").unwrap_or(f64::NAN),
        spec.laplace_left_derivative(1.0)?,
        1e-9,
    );
    c.flag(o, "E exp(R rho) finite", true, classify(&spec, cd.r)?.is_finite(Quantity::Rho));

    let all = c.0.iter().all(|k| k.pass);
    Ok((c.0, all))
}

fn series_value(rep: &fpt_core::oracle::OracleReport, name: &str) -> f64 {
    rep.series(name).map_or(f64::NAN, |s| s.value)
}

pub fn artifact(checks: &[Check], all_pass: bool) -> Result<Artifact, CliError> {
    let mut table = Table::new(&["oracle", "check", "expected", "observed", "tolerance", "pass"]);
    for k in checks {
        table.push([
            k.oracle.to_string(),
            k.check.to_string(),
            num(k.expected),
            num(k.observed),
            num(k.tolerance),
            k.pass.to_string(),
        ]);
    }
    let result = serde_json::json!({ "all_pass": all_pass, "checks": checks });
    Ok(Artifact { result, table })
}
