use povm_core::Error as CoreError;
use thiserror::Error;

use crate::spec::SpecError;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Input was well formed but unusable, e.g. an eigenvalue the observable lacks.
    #[error("{0}")]
    Input(CoreError),
    #[error("numerical failure: {0}")]
    Numerical(CoreError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CommandError {
    pub fn is_numerical(e: &CoreError) -> bool {
        matches!(e, CoreError::NoConvergence { .. } | CoreError::NonFinite { .. })
    }

    pub fn from_core(e: CoreError) -> Self {
        if Self::is_numerical(&e) {
            Self::Numerical(e)
        } else {
            Self::Input(e)
        }
    }

    /// Process exit status: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Numerical(_) => 3,
            _ => 2,
        }
    }
}
