use thiserror::Error;

/// Errors shared across the crate.
///
/// The CLI maps these onto exit codes: invalid input → 2, failed
/// certification (including discrete resonance) → 3, non-convergence → 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root bracket failure for band m={m}, l={l}: {detail}")]
    BracketFailure { m: i64, l: f64, detail: String },

    #[error("spectral non-resonance certification failed: {0}")]
    NotCertified(String),

    #[error(
        "discrete resonance at harmonic k={k}: nearest operator eigenvalue {min_abs_eig:.3e}; \
         refine the grid or re-certify with a different kappa"
    )]
    DiscreteResonance { k: i64, min_abs_eig: f64 },

    #[error("classification mismatch for (m={m}, k={k}): sign test contradicts band evaluation")]
    Classification { m: i64, k: i64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("file format error in {path}: {detail}")]
    FileFormat { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code mirrored by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::GridMismatch | Error::FileFormat { .. } => 2,
            Error::NotCertified(_)
            | Error::DiscreteResonance { .. }
            | Error::Classification { .. }
            | Error::Verification(_) => 3,
            Error::NonConvergence { .. } | Error::BracketFailure { .. } => 4,
            _ => 1,
        }
    }
}
