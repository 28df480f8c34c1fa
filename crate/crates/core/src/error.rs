use thiserror::Error;

/// Errors raised by the core simulator and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dimension}: {reason}")]
    InvalidDimension { dimension: usize, reason: &'static str },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max-entry defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (max-entry defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("eigenvalue {eigenvalue} lies outside [0, 1]")]
    SpectrumOutOfRange { eigenvalue: f64 },

    #[error("POVM elements do not sum to the identity (max-entry defect {defect:e})")]
    IncompletePovm { defect: f64 },

    /// Basis labels are 1-based.
    #[error("basis vectors {first} and {second} are not orthonormal (defect {defect:e})")]
    NotOrthonormal { first: usize, second: usize, defect: f64 },

    #[error("eigenvalue {requested} not found; available eigenvalues: {available:?}")]
    UnknownEigenvalue { requested: f64, available: Vec<f64> },

    #[error("oracle returned {value}, outside [0, 1]")]
    InvalidOracle { value: f64 },

    #[error("permutation enumeration refused for length {0} (limit 8)")]
    TooManyPermutations(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl ToString, found: impl ToString) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
