use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside chart: {0}")]
    OutsideChart(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("ambient has no isometric embedding")]
    MissingEmbedding,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid vector field: {0}")]
    InvalidField(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid scale factor {0}")]
    InvalidScale(f64),
    #[error("surface not contained in domain: {0}")]
    Containment(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid constant: {0}")]
    InvalidConstant(String),
    #[error("certificate invalid: divergence lower bound {mu} is not positive")]
    CertificateInvalid { mu: f64 },
    #[error("topology change during flow: {0}")]
    Topology(String),
    #[error("rejected input: {0}")]
    RejectedInput(String),
    #[error("flow inconclusive: {0}")]
    Inconclusive(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("tube offset too large: {0}")]
    OffsetTooLarge(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
