use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at pixel ({x}, {y})")]
    NonFinitePixel { x: usize, y: usize },
    #[error("height map too small: {width}x{height} (need at least 3x3)")]
    MapTooSmall { width: usize, height: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("normal load {load} N exceeds spring capacity {capacity} N")]
    LoadSaturation { load: f64, capacity: f64 },
    #[error("integration produced a non-finite state: {0}")]
    NonFiniteState(String),
    #[error("episode directory already exists: {0}")]
    EpisodeExists(PathBuf),
    #[error("episode record invalid: {0}")]
    InvalidEpisode(String),
    #[error("tensor file malformed: {0}")]
    BadTensorFile(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("training diverged: {0}")]
    TrainingDiverged(String),
    #[error("checkpoint malformed: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("image encode/decode failed: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;
