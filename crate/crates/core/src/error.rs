use thiserror::Error;

use crate::scalar_root::RootError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// An ordered experience state `(i, j)`.
pub type State = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution table: {0}")]
    InvalidTable(String),

    #[error("root finding failed at state {state:?}: {source}")]
    ConvergenceFailure {
        state: State,
        #[source]
        source: RootError,
    },

    #[error("residual at state {state:?} changes sign {sign_changes} times on the scan grid")]
    MultipleRoots { state: State, sign_changes: usize },

    #[error("value iteration did not converge after {iterations} passes (last sup-norm change {change:e})")]
    MaxIterExceeded { iterations: usize, change: f64 },

    #[error("solve failed at grid point {point}: {source}")]
    GridPoint {
        point: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Root(#[from] RootError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True when the root cause is a bracket without a sign change.
    pub fn is_bracketing_failure(&self) -> bool {
        match self {
            Error::Root(e) | Error::ConvergenceFailure { source: e, .. } => {
                matches!(e, RootError::NoSignChange { .. })
            }
            Error::GridPoint { source, .. } => source.is_bracketing_failure(),
            _ => false,
        }
    }

    /// True when the error stems from bad input rather than a numerical failure.
    pub fn is_invalid_input(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::InvalidTable(_) => true,
            Error::Root(e) | Error::ConvergenceFailure { source: e, .. } => {
                matches!(e, RootError::InvalidProblem(_))
            }
            Error::GridPoint { source, .. } => source.is_invalid_input(),
            _ => false,
        }
    }
}
