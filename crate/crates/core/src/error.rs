use std::path::PathBuf;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to parse graph document: {0}")]
    Parse(String),

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("walk library for H={hops} needs ~{estimated_bytes} bytes, over the cap of {cap_bytes}")]
    ResourceLimit {
        hops: usize,
        estimated_bytes: u64,
        cap_bytes: u64,
    },

    #[error("no candidate walks from node {source_node} toward targets {targets:?}")]
    EmptyCandidates { source_node: NodeId, targets: Vec<NodeId> },

    #[error("simulation stalled: {0}")]
    SimulationStalled(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot summarize an empty group")]
    EmptyGroup,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
