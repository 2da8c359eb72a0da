use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error(
        "quadrature did not converge: estimate {estimate:e} with error {error:e} after {subdivisions} subdivisions"
    )]
    Quadrature { estimate: f64, error: f64, subdivisions: usize },

    #[error("index error: {0}")]
    Index(String),

    #[error("invalid leaf configuration: {0}")]
    InvalidConfig(String),

    #[error("newick parse error at byte {pos}: {msg}")]
    Newick { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { op, msg: msg.into() }
}
