use thiserror::Error;

use crate::expr::{DiffError, EvalError, ParseError};
use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("evaluation failed at {at}: {source}")]
    Eval { at: String, source: EvalError },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("orientation error: eta(b,a) = {0} must be positive")]
    Orientation(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("log-domain error: {0}")]
    LogDomain(String),
    #[error("positivity violated: value {value} at {at}")]
    Positivity { at: String, value: f64 },
    #[error("point {point} leaves the domain")]
    DomainExit { point: String },
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("condition C fails: worst residual {residual:e} at {witness}")]
    ConditionC { residual: f64, witness: String },
    #[error("certification failed: {0}")]
    Certification(String),
}

impl Error {
    pub(crate) fn eval(at: impl std::fmt::Display, source: EvalError) -> Self {
        Error::Eval {
            at: at.to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
