use thiserror::Error;

/// Errors produced while building, releasing or analysing a histogram.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("record {index}: {reason}")]
    Record { index: usize, reason: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("privacy budget exhausted: requested {requested}, remaining {remaining}")]
    BudgetExhausted { requested: f64, remaining: f64 },

    #[error("partition boxes {0} and {1} overlap")]
    OverlappingBoxes(usize, usize),

    #[error("partition boxes cover {covered} of {total} cells")]
    NotCovering { covered: usize, total: usize },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
