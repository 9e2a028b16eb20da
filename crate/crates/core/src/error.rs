use thiserror::Error;

use crate::model::VehicleId;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),

    #[error("covariance square root failed after jitter retries")]
    Factorization,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("trace parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        SimError::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
