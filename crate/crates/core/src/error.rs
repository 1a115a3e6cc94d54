use thiserror::Error;

use crate::lp::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite coordinate in vector")]
    NonFinite,
    #[error("gauge norm undefined: generators do not absorb the vector")]
    NotAbsorbed,
    #[error("enumeration budget exceeded: {needed} solver calls needed, cap is {cap}")]
    BudgetExceeded { needed: u128, cap: u128 },
    #[error("no data: {0}")]
    NoData(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid experiment spec: {field}: {message}")]
    InvalidSpec { field: String, message: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
