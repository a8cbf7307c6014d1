use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("singular Fisher information matrix: {0}")]
    SingularFim(String),

    #[error("approximation out of domain: {0}")]
    ApproximationOutOfDomain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::DegenerateGeometry(msg.into())
}
