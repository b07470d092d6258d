use std::path::PathBuf;

use regcap_solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("hour {hour_id}: expected {expected} samples, found {found}")]
    IncompleteHour { hour_id: u32, expected: usize, found: usize },
    #[error("hour {hour_id}, step {step}: sample {value} outside [-1, 1]")]
    SampleOutOfRange { hour_id: u32, step: usize, value: f64 },
    #[error("line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate statistics: {0}")]
    Degenerate(String),
    #[error("model is infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IncompleteHour { .. } => "incomplete_hour",
            Error::SampleOutOfRange { .. } => "sample_out_of_range",
            Error::MalformedRow { .. } => "malformed_row",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Degenerate(_) => "degenerate",
            Error::Infeasible(_) => "infeasible",
            Error::Solver(_) => "solver_failure",
            Error::MissingFile(_) => "missing_file",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
