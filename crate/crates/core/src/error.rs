use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty region: the mask has no selected pixels")]
    EmptyRegion,

    #[error("invalid color {0:?}, expected #rrggbb")]
    InvalidColor(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),

    #[error("non-finite value in {channel} at ({row}, {col})")]
    NonFinite { channel: String, row: usize, col: usize },

    #[error("invalid confidence record ({i}, {j}): {reason}")]
    InvalidConfidence { i: usize, j: usize, reason: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("pair ({0}, {1}) is outside the batch")]
    PairOutsideBatch(usize, usize),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown query id {0}")]
    UnknownQuery(usize),

    #[error("provider error: {0}")]
    Provider(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
