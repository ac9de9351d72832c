use std::io;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown reduction scheme `{0}` (expected one of FULL, F, M, L, FL, FF, LL, FML, FFF, LLL, V, C, or ALL)")]
pub struct SchemeParseError(pub String);

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("truncation limit must be at least 1")]
    ZeroLimit,
    #[error("special token `{0}` listed more than once")]
    DuplicateSpecial(String),
    #[error("special tokens must include `{0}`")]
    MissingUnknown(&'static str),
    #[error("token {0:?} contains whitespace and cannot be stored")]
    InvalidToken(String),
    #[error("vocab file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl VocabError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        VocabError::Parse { line, message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum MlmError {
    #[error("mask rate must lie in (0, 1), got {0}")]
    InvalidRate(f64),
    #[error("substitution probabilities must be non-negative and sum to at most 1 (mask {mask}, random {random})")]
    InvalidRuleProbabilities { mask: f64, random: f64 },
    #[error("mask position {position} out of range for a sample of {len} tokens")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("mask positions must be strictly increasing")]
    UnsortedPositions,
    #[error("write failed at byte offset {offset}: {source}")]
    Io { offset: u64, source: io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum TokenIoError {
    #[error("truncated token record at byte offset {0}")]
    Truncated(u64),
    #[error("token record at byte offset {0} is not valid UTF-8")]
    InvalidUtf8(u64),
    #[error(transparent)]
    Io(#[from] io::Error),
}
