use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] ibmi_core::Error),

    #[error("p = {p} needs about {needed} bytes, over the budget of {budget}")]
    OutOfMemoryBudget { p: usize, needed: u64, budget: u64 },

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("no rows to write")]
    EmptyRows,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
