use std::path::Path;

use serde_json::json;

/// Process exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// The requested moment is infinite.
pub const EXIT_INFINITE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fpt_core::Error),
    #[error("invalid spec file: {0}")]
    Spec(String),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn spec(msg: impl Into<String>) -> Self {
        CliError::Spec(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_infinite_refusal() => EXIT_INFINITE,
            _ => EXIT_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        use fpt_core::Error as E;
        match self {
            CliError::Core(E::InvalidSpec(_)) | CliError::Spec(_) => "invalid_spec",
            CliError::Core(E::InfiniteMoment { .. }) => "infinite_moment",
            CliError::Core(E::NoPositiveExponent) => "no_positive_exponent",
            CliError::Core(E::Domain(_)) | CliError::Usage(_) => "invalid_argument",
            CliError::Core(E::InconsistentTilt(_)) => "inconsistent_tilt",
            CliError::Core(E::Quadrature { .. }) => "quadrature",
            CliError::Core(E::Unsupported(_)) => "unsupported",
            CliError::Core(E::Simulation(_)) => "simulation",
            CliError::Core(E::Refinement(_)) => "refinement",
            CliError::Io { .. } => "io",
            CliError::Output(_) => "output",
        }
    }

    /// The error as printed on exit.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            CliError::Core(fpt_core::Error::InvalidSpec(inv)) | CliError::Spec(inv) => {
                body["invariant"] = json!(inv);
            }
            CliError::Core(fpt_core::Error::InfiniteMoment { quantity, a, reason }) => {
                body["quantity"] = json!(quantity);
                body["a"] = json!(a);
                body["reason"] = json!(reason);
            }
            _ => {}
        }
        json!({ "error": body })
    }
}
