use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("leading coefficient is zero; not a cubic")]
    Degree,

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("analysis error: {0}")]
    Analysis(String),
}
