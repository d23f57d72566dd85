//! JSON increment-law files.
//!
//! ```json
//! {"family": "lattice_pmf", "atoms": [[1, 0.8], [-1, 0.2]]}
//! {"family": "exp_difference", "alpha": 1.0, "kappa": 2.0}
//! {"family": "shifted_heavy_exp", "h": 1.0, "r": 3.0, "s": 1.4}
//! {"family": "shifted_heavy_exp", "h": 1.0, "r": 3.0, "margin": 1.0}
//! ```
//!
//! The `margin` form places the shift at `psi'(h) / psi(h) + margin`, which
//! puts the minimum of the transform at the edge of its domain.

use std::fs;
use std::path::Path;

use fpt_core::dist::ShiftedHeavyExp;
use fpt_core::oracle::example3_construct;
use fpt_core::IncrementSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecFile {
    LatticePmf {
        atoms: Vec<(f64, f64)>,
    },
    ExpDifference {
        alpha: f64,
        kappa: f64,
    },
    ShiftedHeavyExp {
        h: f64,
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        margin: Option<f64>,
    },
}

impl SpecFile {
    pub fn build(&self) -> Result<IncrementSpec, CliError> {
        let spec = match *self {
            SpecFile::LatticePmf { ref atoms } => IncrementSpec::lattice(atoms.iter().copied())?,
            SpecFile::ExpDifference { alpha, kappa } => IncrementSpec::exp_difference(alpha, kappa)?,
            SpecFile::ShiftedHeavyExp { h, r, s: Some(s), margin: None } => IncrementSpec::shifted_heavy_exp(h, r, s)?,
            SpecFile::ShiftedHeavyExp { h, r, s: None, margin: Some(m) } => example3_construct(h, r, m)?.0,
            SpecFile::ShiftedHeavyExp { .. } => {
                return Err(CliError::spec("shifted_heavy_exp needs exactly one of `s` and `margin`"))
            }
        };
        Ok(spec)
    }
}

/// Reads and validates a spec file.
pub fn load(path: &Path) -> Result<(SpecFile, IncrementSpec), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: SpecFile =
        serde_json::from_str(&text).map_err(|e| CliError::spec(format!("{}: {e}", path.display())))?;
    let spec = file.build()?;
    Ok((file, spec))
}

/// JSON description of a law, including the tilt carried by the heavy family.
pub fn describe(spec: &IncrementSpec) -> serde_json::Value {
    match spec {
        IncrementSpec::LatticePmf(l) => serde_json::json!({
            "family": "lattice_pmf",
            "atoms": l.atoms().iter().map(|a| [a.value, a.prob]).collect::<Vec<_>>(),
        }),
        IncrementSpec::ExpDifference(e) => serde_json::json!({
            "family": "exp_difference",
            "alpha": e.alpha(),
            "kappa": e.kappa(),
        }),
        IncrementSpec::ShiftedHeavyExp(s) => heavy(s),
    }
}

fn heavy(s: &ShiftedHeavyExp) -> serde_json::Value {
    serde_json::json!({
        "family": "shifted_heavy_exp",
        "h": s.h(),
        "r": s.r(),
        "s": s.s(),
        "tilt": s.tilt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_family() {
        let f: SpecFile = serde_json::from_str(r#"{"family":"lattice_pmf","atoms":[[1,0.8],[-1,0.2]]}"#).unwrap();
        assert!(matches!(f.build().unwrap(), IncrementSpec::LatticePmf(_)));
        let f: SpecFile = serde_json::from_str(r#"{"family":"exp_difference","alpha":1,"kappa":2}"#).unwrap();
        assert_eq!(f.build().unwrap(), IncrementSpec::exp_difference(1.0, 2.0).unwrap());
        let f: SpecFile = serde_json::from_str(r#"{"family":"shifted_heavy_exp","h":1,"r":3,"margin":1}"#).unwrap();
        assert!(f.build().unwrap().domain_closed());
    }

    #[test]
    fn rejects_ambiguous_and_invalid_input() {
        let f: SpecFile = serde_json::from_str(r#"{"family":"shifted_heavy_exp","h":1,"r":3,"s":1,"margin":1}"#).unwrap();
        assert!(f.build().is_err());
        let f: SpecFile = serde_json::from_str(r#"{"family":"lattice_pmf","atoms":[[1,0.5],[-1,0.2]]}"#).unwrap();
        assert!(f.build().is_err());
        assert!(serde_json::from_str::<SpecFile>(r#"{"family":"cauchy"}"#).is_err());
    }
}
