use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] hypermetric::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The report was produced but at least one check failed.
    #[error("{0} check(s) failed")]
    CheckFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Config(_) => 2,
            // bad parameters reaching the library are configuration mistakes
            CliError::Numerical(hypermetric::Error::InvalidInput(_)) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::Numerical(hypermetric::Error::InvalidInput(_)) => "config",
            CliError::Numerical(e) => numerical_kind(e),
            CliError::Io { .. } => "io",
            CliError::CheckFailed(_) => "check_failed",
        }
    }

    /// The machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}

fn numerical_kind(e: &hypermetric::Error) -> &'static str {
    use hypermetric::Error::*;
    match e {
        PoleProximity { .. } => "PoleProximity",
        ZeroProximity { .. } => "ZeroProximity",
        TailUnboundable(_) => "TailUnboundable",
        BoundaryDegeneracy(_) => "BoundaryDegeneracy",
        NonConvergence(_) => "NonConvergence",
        NonFinite { .. } => "NonFinite",
        SeparationTooSmall { .. } => "SeparationTooSmall",
        PathThroughPole { .. } => "PathThroughPole",
        DegenerateDerivative { .. } => "DegenerateDerivative",
        NonHyperbolicExponent { .. } => "NonHyperbolicExponent",
        HalfPlaneViolation { .. } => "HalfPlaneViolation",
        InvalidInput(_) => "InvalidInput",
    }
}
