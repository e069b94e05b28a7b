//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("FIR order {order} does not fit block length {block}")]
    FirTooLong { order: usize, block: usize },
    #[error("bit count {bits} not divisible by {bits_per_symbol} bits per symbol")]
    BitCount { bits: usize, bits_per_symbol: u32 },
    #[error("unsupported constellation order {0}")]
    UnsupportedConstellation(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("regressor ill-conditioned: estimated condition {0:.3e}")]
    IllConditioned(f64),
    #[error("rank-deficient regressor at column {0}")]
    RankDeficient(usize),
    #[error("all pilot bins excluded by the fade guard")]
    DegenerateChannel,
    #[error("degenerate estimate: leading coefficient is zero")]
    DegenerateEstimate,
    #[error("fingerprint step {step} failed: {source}")]
    PipelineStep { step: u8, source: Box<Error> },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    /// Tag an error with the fingerprint pipeline step that raised it.
    pub(crate) fn at_step(self, step: u8) -> Error {
        Error::PipelineStep {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
