//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounds: lo={lo} > hi={hi}")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("rating {value} at ({row}, {col}) outside [{lo}, {hi}]")]
    RatingOutOfRange {
        row: usize,
        col: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("invalid noise scale: {0} (must be > 0)")]
    InvalidScale(f64),

    #[error("invalid delta: {0} (must be in (0, 1))")]
    InvalidDelta(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank {d} out of range for a {m}x{n} matrix")]
    RankOutOfRange { d: usize, m: usize, n: usize },

    #[error("split error: {0}")]
    Split(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("stats error: {0}")]
    Stats(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("index ({row}, {col}) out of range for {m}x{n}")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        m: usize,
        n: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
