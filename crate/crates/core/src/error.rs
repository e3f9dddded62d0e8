use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("zero element has no filtration degree")]
    ZeroElement,
    #[error("not a unit: constant term is zero")]
    NotAUnit,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not in algebra span: {0}")]
    NotInSpan(String),
    #[error("non-admissible step: {0}")]
    NonAdmissibleStep(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
