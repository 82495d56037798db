use crate::topology::AgentId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("weight of arc {from} -> {to} at t = {t} is {value}, outside [{lo}, {hi}]")]
    BoundViolation {
        from: AgentId,
        to: AgentId,
        t: f64,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("state became non-finite at t = {t}")]
    Divergence { t: f64 },

    #[error("certificate construction failed: {0}")]
    CertificateFailure(String),

    #[error("certificate invalid: {0}")]
    CertificateInvalid(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
