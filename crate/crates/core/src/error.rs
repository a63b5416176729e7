use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("numeric failure at iteration {iteration}: {context}")]
    Numeric { iteration: u64, context: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("step size bound violated: sup alpha_n = {alpha_bar} but the bound is {bound} (L = {lipschitz})")]
    StepSizeRejected {
        alpha_bar: f64,
        bound: f64,
        lipschitz: f64,
    },

    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
