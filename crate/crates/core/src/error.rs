use thiserror::Error;

/// Which endpoint of a computation left the representable range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient depth: need {needed}, have {have}")]
    InsufficientDepth { needed: u32, have: u32 },
    #[error("window too short: need {needed} letters, have {have}")]
    InsufficientWindow { needed: usize, have: usize },
    #[error("word length {len} exceeds table limit {max}")]
    LengthOverflow { len: usize, max: usize },
    #[error("bit scan limit {0} exceeded")]
    ScanLimit(u64),
    #[error("value out of floating range ({0:?})")]
    RangeExceeded(Direction),
    #[error("invalid interval {0}")]
    InvalidInterval(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, Error>;
