use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular curve: {0}")]
    Singular(String),
    #[error("{what} of size {size} exceeds cap {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },
    #[error("bad prime {p}: {reason}")]
    BadPrime { p: u64, reason: String },
    #[error("degenerate rational function modulo {p}")]
    Degenerate { p: u64 },
    #[error("hurwitz table holds n <= {have}, need n <= {need}")]
    CacheTooSmall { have: u64, need: u64 },
    #[error("missing eigenvalue for form {form} at p = {p}")]
    MissingEigenvalue { form: String, p: u64 },
    #[error("eigenvalue {value} for form {form} at p = {p} violates |lambda| <= 2")]
    DeligneBound { form: String, p: u64, value: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
