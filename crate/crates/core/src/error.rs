use thiserror::Error;

use crate::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vocabulary: {0}")]
    Vocab(String),

    #[error("token id {id} out of range for vocabulary of size {size} (corrupted hypothesis)")]
    TokenOutOfRange { id: TokenId, size: usize },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("scorer contract violation: {0}")]
    Scorer(String),

    #[error("score matrix has {got} columns, expected {expected} (vocabulary size)")]
    ScoreShape { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("search space of {size} sequences exceeds the enumeration limit of {limit}")]
    SearchTooLarge { size: u128, limit: u128 },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
