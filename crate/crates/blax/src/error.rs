//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {details}")]
    Dimension { op: &'static str, details: String },

    #[error("matrix is not Hermitian (max asymmetry {asym:.3e})")]
    NotHermitian { asym: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e}, tolerance {tol:.3e})")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("singular or ill-conditioned system (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("state operator is not stable (spectral radius {rho})")]
    Unstable { rho: f64 },

    #[error("argument outside admissible domain: {0}")]
    Domain(String),

    #[error("pair is not exactly observable: {0}")]
    NotExactlyObservable(String),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("verification failure in {name}: residual {residual:.3e} exceeds {tolerance:.3e} ({witness})")]
    Verification {
        name: String,
        residual: f64,
        tolerance: f64,
        witness: String,
    },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dim(op: &'static str, details: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            details: details.into(),
        }
    }
}
