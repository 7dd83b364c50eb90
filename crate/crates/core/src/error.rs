use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-positive rate: {0}")]
    NonPositiveRate(String),
    #[error("negative service rate: {0}")]
    NegativeServiceRate(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex did not converge within {iterations} pivots")]
    NumericalFailure { iterations: usize },
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("static allocation problem is infeasible: arrival rates cannot be served")]
    InfeasibleModel,
    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("basic activities do not form a spanning tree")]
    NotATree,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("scaling bound violated at n = {n}: {detail}")]
    ScalingViolation { n: u64, detail: String },
    #[error("policy `{policy}` returned an infeasible assignment at event {event}: {detail}")]
    PolicyViolation {
        policy: String,
        event: u64,
        detail: String,
    },
    #[error("invalid simulation parameters: {0}")]
    InvalidParameters(String),
}
