use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use fpt_core::analyze::{classify_with, critical_data, gamma_of_with};
use fpt_core::asym::{constant_for, convergence_table, AsymOptions};
use fpt_core::exact::{exp_moment_rho_exact, exp_moment_tau_exact, k_of, v_of, SeriesOptions, SeriesResult};
use fpt_core::tilt::{tilt_spec, tilted_mean, TiltParams};
use fpt_core::walk::{estimate_exp_moment_direct, estimate_exp_moment_tau_tilted, simulate_functionals};
use fpt_core::{IncrementSpec, LatticeStructure, McConfig, McEstimate, Quantity};
use serde_json::json;

use crate::error::CliError;
use crate::exec::Rayon;
use crate::report::{num, Artifact, Table, TableRange};
use crate::spec_file::describe;

fn to_json<T: serde::Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

fn structure_json(s: LatticeStructure) -> serde_json::Value {
    match s {
        LatticeStructure::NonLattice => json!({ "kind": "non_lattice" }),
        LatticeStructure::Lattice { span } => json!({ "kind": "lattice", "span": span }),
        LatticeStructure::OffsetLattice { span, offset } => {
            json!({ "kind": "offset_lattice", "span": span, "offset": offset })
        }
    }
}

pub fn analyze(spec: &IncrementSpec, levels: &[f64]) -> Result<Artifact, CliError> {
    let cd = critical_data(spec)?;
    let mut table = Table::new(&["a", "quantity", "verdict", "reason", "gamma"]);
    let mut per_a = Vec::new();
    for &a in levels {
        let c = classify_with(spec, a, &cd)?;
        // Defined for 0 < a <= R only.
        let gamma = (a > 0.0).then(|| gamma_of_with(spec, a, &cd).ok()).flatten().map(|t| t.gamma());
        for v in &c.verdicts {
            table.push([
                num(c.a),
                v.quantity.name().to_string(),
                format!("{:?}", v.verdict),
                format!("{:?}", v.reason),
                gamma.map_or(String::new(), num),
            ]);
        }
        let mut entry = to_json(&c)?;
        entry["gamma"] = json!(gamma);
        per_a.push(entry);
    }
    let result = json!({
        "family": spec.family_name(),
        "lattice": structure_json(spec.lattice_structure()),
        "t_max": cd.t_max,
        "R": cd.r,
        "gamma0": cd.gamma0,
        "boundary": cd.boundary,
        "phi_prime_at_gamma0": cd.phi_prime_at_gamma0,
        "nonnegative": cd.nonnegative,
        "p_zero": cd.beta,
        "classifications": per_a,
    });
    Ok(Artifact { result, table })
}

pub fn tilt_check(spec: &IncrementSpec, a: f64, gamma: Option<f64>) -> Result<Artifact, CliError> {
    let tp = match gamma {
        Some(g) => TiltParams::new(spec, a, g)?,
        None => gamma_of_with(spec, a, &critical_data(spec)?)?,
    };
    let tilted = tilt_spec(spec, &tp)?;
    let mean = tilted_mean(spec, &tp)?;
    let total = tilted.laplace(0.0)?.value();
    let mut table = Table::new(&["a", "gamma", "witness", "consistent", "tilted_mean", "tilted_total_mass"]);
    table.push([num(tp.a()), num(tp.gamma()), num(tp.witness()), tp.is_consistent().to_string(), num(mean), num(total)]);
    let result = json!({
        "params": tp,
        "consistent": tp.is_consistent(),
        "tilted_mean": mean,
        "tilted_total_mass": total,
        "tilted_law": describe(&tilted),
    });
    Ok(Artifact { result, table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SimMethod {
    /// Sample under the original law.
    Direct,
    /// Sample under the tilted law and reweight (`tau` only).
    Tilted,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    spec: &IncrementSpec,
    a: f64,
    x: f64,
    quantity: Quantity,
    method: SimMethod,
    mc: &McConfig,
    exec: &Rayon,
    emit_paths: Option<&Path>,
) -> Result<Artifact, CliError> {
    let est: McEstimate = match method {
        SimMethod::Direct => estimate_exp_moment_direct(spec, a, x, quantity, mc, exec)?,
        SimMethod::Tilted if quantity == Quantity::Tau => estimate_exp_moment_tau_tilted(spec, a, x, mc, exec)?,
        SimMethod::Tilted => return Err(CliError::usage("the tilted estimator is only available for tau")),
    };
    if let Some(path) = emit_paths {
        let run = simulate_functionals(spec, x, mc, exec)?;
        let mut t = Table::new(&["path_id", "tau", "N", "rho", "S_tau", "overshoot", "truncated"]);
        for (i, p) in run.paths.iter().enumerate() {
            t.push([
                i.to_string(),
                p.tau.to_string(),
                p.n_visits.to_string(),
                p.rho.to_string(),
                num(p.s_tau),
                num(p.overshoot),
                p.truncated.to_string(),
            ]);
        }
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        crate::report::write_csv(BufWriter::new(f), &t)?;
    }
    let mut table = Table::new(&["quantity", "a", "x", "mean", "std_error", "n_paths", "n_truncated", "seed"]);
    table.push([
        quantity.name().to_string(),
        num(a),
        num(x),
        num(est.mean),
        num(est.std_error),
        est.n_paths.to_string(),
        est.n_truncated.to_string(),
        est.seed.to_string(),
    ]);
    Ok(Artifact { result: to_json(&est)?, table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    /// `sum_n exp(a n) P{S_n <= 0} / n`.
    #[value(name = "K")]
    K,
    /// `sum_n exp(a n) P{S_n <= x}`.
    #[value(name = "V")]
    V,
    /// `E exp(a tau(x))`.
    #[value(name = "tau")]
    Tau,
    /// `E exp(a rho(x))`.
    #[value(name = "rho")]
    Rho,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::K => "K",
            Which::V => "V",
            Which::Tau => "tau",
            Which::Rho => "rho",
        }
    }
}

pub fn series(spec: &IncrementSpec, a: f64, x: f64, which: Which, opts: &SeriesOptions) -> Result<Artifact, CliError> {
    let r: SeriesResult = match which {
        Which::K => k_of(spec, a, opts)?,
        Which::V => v_of(spec, a, x, opts)?,
        Which::Tau => exp_moment_tau_exact(spec, a, x, opts)?,
        Which::Rho => exp_moment_rho_exact(spec, a, x, opts)?,
    };
    let mut table = Table::new(&[
        "which", "a", "x", "value", "n_terms", "tail_bound", "tail_kind", "diverged", "fitted_exponent",
    ]);
    table.push([
        which.name().to_string(),
        num(a),
        num(x),
        num(r.value),
        r.n_terms.to_string(),
        num(r.tail_bound),
        format!("{:?}", r.tail_kind),
        r.diverged.to_string(),
        r.fitted_exponent.map_or(String::new(), num),
    ]);
    Ok(Artifact { result: to_json(&r)?, table })
}

pub fn asymptote(
    spec: &IncrementSpec,
    a: f64,
    quantity: Quantity,
    range: Option<&TableRange>,
    opts: &AsymOptions,
    exec: &Rayon,
) -> Result<Artifact, CliError> {
    match range {
        None => {
            let c = constant_for(spec, a, quantity, opts, exec)?;
            let mut table = Table::new(&["quantity", "a", "gamma", "constant", "combined_se"]);
            table.push([quantity.name().to_string(), num(c.a), num(c.gamma), num(c.value), num(c.combined_se)]);
            Ok(Artifact { result: json!({ "constant": to_json(&c)? }), table })
        }
        Some(r) => {
            let t = convergence_table(spec, a, quantity, &r.points(), opts, exec)?;
            let mut table = Table::new(&["x", "scaled_moment", "constant", "rel_gap"]);
            for row in &t.rows {
                table.push([num(row.x), num(row.scaled_moment), num(row.constant), num(row.rel_gap)]);
            }
            let result = json!({
                "constant": to_json(&t.constant)?,
                "table": to_json(&t.rows)?,
                "bounded_from": t.bounded_from,
                "non_monotone": t.non_monotone,
            });
            Ok(Artifact { result, table })
        }
    }
}
