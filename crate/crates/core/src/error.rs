use std::path::PathBuf;

use thiserror::Error;

use crate::trace::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: time {time} is earlier than the previous event ({previous})")]
    Ordering { line: usize, time: f64, previous: f64 },

    #[error("line {line}: orphan event for node {node}: {msg}")]
    Orphan { line: usize, node: NodeId, msg: String },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown strategy name `{0}`")]
    UnknownStrategy(String),

    #[error("strategy {0} has no objective curve")]
    NoObjective(&'static str),

    #[error("events out of order: {at} after {last}")]
    OutOfOrder { at: f64, last: f64 },

    #[error("baseline carries no infrastructure load")]
    ZeroBaseline,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
