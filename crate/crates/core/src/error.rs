use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("element {element}: {reason}")]
    Assembly { element: usize, reason: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The structural stiffness could not be factorized, i.e. the boundary
    /// conditions leave at least one rigid-body mode.
    #[error("structural stiffness is singular (rigid-body mode not removed): {0}")]
    RigidBodyMode(String),

    #[error("metric matrix is not positive definite: {0}")]
    Metric(String),

    #[error("invalid modal basis: {0}")]
    InvalidBasis(String),

    #[error("state dimension {dim} exceeds the dense eigensolver limit {limit}; coarsen the mesh")]
    Capacity { dim: usize, limit: usize },

    #[error("cannot classify spectrum: expected {expected} purely real eigenvalues, found {found} at tolerance {tol:e}")]
    Classification { expected: usize, found: usize, tol: f64 },

    #[error("step size underflow at t = {t:e} (h = {h:e}); the system is too stiff for the explicit integrator")]
    Stiffness { t: f64, h: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Config and parse errors, as opposed to numeric failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse { .. })
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
