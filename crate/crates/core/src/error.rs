use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate channel: {attempts} consecutive draws exceeded the condition threshold")]
    DegenerateChannel { attempts: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
