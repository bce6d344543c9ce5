use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `r` lies on the z axis, where the azimuth and its error are undefined.
    #[error("pole-degenerate vector {0:?}: azimuthal angle is undefined")]
    PoleDegenerate([f64; 3]),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
