use thiserror::Error;

use crate::algorithms::NetworkState;
use crate::data_io::IdxError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("disconnected graph: {0}")]
    Disconnected(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("non-finite state at iteration {iteration}")]
    Diverged {
        iteration: usize,
        /// Last state whose entries were all finite.
        last_finite: Box<NetworkState>,
    },
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("parameter search failed: {0}")]
    Search(String),
    #[error(transparent)]
    Idx(#[from] IdxError),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short category label; also selects the CLI exit code.
    pub fn category(&self) -> (&'static str, i32) {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => ("config", 2),
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Idx(_) | Error::Dataset(_) => {
                ("io", 3)
            }
            Error::Diverged { .. } | Error::Estimation(_) | Error::Search(_) | Error::NotSpd(_) => {
                ("numerical", 4)
            }
            Error::InvalidTopology(_)
            | Error::Disconnected(_)
            | Error::DimensionMismatch { .. } => ("input", 5),
        }
    }
}
