use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
}
