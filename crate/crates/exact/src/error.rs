use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("division by the zero rational function")]
    DivisionByZero,

    #[error("series order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("denominator {value:e} is within the pole tolerance at beta = {beta}")]
    PoleProximity { beta: f64, value: f64 },

    #[error("malformed expression: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ExactError>;
