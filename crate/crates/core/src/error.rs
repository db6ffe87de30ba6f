use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpcError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no edges")]
    NoEdges,

    #[error("non-finite input values in {0}")]
    NonFinite(&'static str),

    #[error("numerical divergence")]
    NumericalDivergence,

    #[error("k-gradient undefined for PCNET")]
    KGradientUndefined,

    #[error("invalid filter spec: {0}")]
    InvalidFilter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("empty index set: {0}")]
    EmptyIndex(&'static str),

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("zero input signal")]
    ZeroSignal,

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SpcError>;
