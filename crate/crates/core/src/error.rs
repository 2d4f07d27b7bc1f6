//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("resolvent (iwI - A) is numerically singular at omega = {0}")]
    SingularResolvent(f64),
    #[error("state norm exceeded the overflow guard during simulation")]
    UnstableBlowup,
    #[error("recipe is a static kind and carries no filter")]
    StaticKind,
    #[error("missing variable: {0}")]
    MissingVariable(String),
    #[error("unsupported value set for this builder: {0}")]
    UnsupportedSet(String),
    #[error("unsupported recipe/set combination: {0}")]
    UnsupportedCombination(String),
    #[error("plant has no performance channel")]
    NoPerformanceChannel,
    #[error("sign constraint violated: {0}")]
    InvalidSignature(String),
    #[error("link strength out of range: {0}")]
    LinkOutOfRange(String),
    #[error("frequency response leaves the value set at omega = {0} (form value {1})")]
    MembershipViolation(f64, f64),
    #[error("no KYP witness exists: {0}")]
    InfeasibleWitness(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
