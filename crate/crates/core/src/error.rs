use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image of {height}x{width} pixels is too small for a {n}x{n} grid")]
    DimensionTooSmall { height: usize, width: usize, n: usize },

    #[error("frame layers disagree in size: {0}")]
    FrameShape(String),

    #[error("segmentation id {0} has no entry in the label table")]
    UnknownLabel(u16),

    #[error("invalid grid configuration: {0}")]
    InvalidGridConfig(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid action id {0}")]
    InvalidAction(String),

    #[error("action block must hold {expected} actions, got {got}")]
    BlockLength { expected: usize, got: usize },

    #[error("instruction text is empty")]
    EmptyInstruction,

    #[error("system description is empty")]
    EmptySystemText,

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("prompt is empty")]
    EmptyPrompt,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("empty episode set")]
    EmptyEpisodeSet,

    #[error("all class counts are zero")]
    AllZeroCounts,

    #[error("logits contain a non-finite value")]
    NonFiniteLogits,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shortest path length must be positive, got {0}")]
    NonPositiveShortestPath(f64),

    #[error("invalid episode: {0}")]
    InvalidEpisode(String),

    #[error("pose ({x:.3}, {y:.3}) lies inside an obstacle")]
    PoseInObstacle { x: f64, y: f64 },

    #[error("world generation failed for seed {seed} after {attempts} attempts")]
    GenerationFailed { seed: u64, attempts: usize },

    #[error("no path from ({sx:.2}, {sy:.2}) to ({gx:.2}, {gy:.2})")]
    NoPath { sx: f64, sy: f64, gx: f64, gy: f64 },

    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord { path: PathBuf, line: usize, reason: String },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{0} not found")]
    MissingFile(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("policy failed: {0}")]
    Policy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
