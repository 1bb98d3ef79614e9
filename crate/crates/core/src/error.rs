use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Refused` is reserved for precondition violations that the caller asked
/// for explicitly (e.g. a negative-moment order outside the validity window);
/// the CLI maps it to its own exit code so pipelines can distinguish
/// "bound failed" from "experiment not runnable".
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample block of {rows} x {dim} f64 exceeds the memory budget of {budget} bytes")]
    MemoryBudget {
        rows: usize,
        dim: usize,
        budget: usize,
    },

    #[error("refused: {0}")]
    Refused(String),

    #[error("unknown catalog name: {0}")]
    UnknownName(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
