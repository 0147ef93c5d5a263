use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the workbench.
///
/// The variants are grouped so that front-ends can map them onto stable exit
/// codes; see [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("no path from {src} to {dst}")]
    NoPath { src: String, dst: String },

    #[error("invalid trace: {0}")]
    Trace(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("flow {src}->{dst} has no selected path")]
    UncoveredPair { src: String, dst: String },

    #[error("LP solver finished with status {0:?}")]
    Solver(LpStatus),

    #[error("allocation invariant violated: {0}")]
    Invariant(String),

    #[error("enumeration bound exceeded: {paths} candidate paths (limit {limit})")]
    EnumerationBound { paths: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite gradient in update step {step}")]
    NonFiniteGradient { step: u64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Solver,
    Other,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Shape(_) => ErrorKind::Config,
            Error::Topology(_)
            | Error::NoPath { .. }
            | Error::Trace(_)
            | Error::Parse { .. }
            | Error::Checkpoint(_)
            | Error::Io(_)
            | Error::Csv(_) => ErrorKind::Data,
            Error::Solver(_) | Error::Invariant(_) | Error::UncoveredPair { .. } => {
                ErrorKind::Solver
            }
            Error::EnumerationBound { .. } | Error::NonFiniteGradient { .. } => ErrorKind::Other,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
