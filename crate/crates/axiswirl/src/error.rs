use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular point: source and target coincide at (r, z) = ({r}, {z})")]
    SingularPoint { r: f64, z: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("CFL violation: measured CFL number {cfl:.4} >= 0.5")]
    Cfl { cfl: f64 },
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
