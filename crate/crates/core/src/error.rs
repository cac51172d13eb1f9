use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spectrum has no positive energy on the visible range")]
    DegenerateSpectrum,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field has zero norm")]
    ZeroField,

    #[error("matrix is singular or not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("wavelength mismatch between incident ({0} nm) and outgoing ({1} nm) wavevectors")]
    WavelengthMismatch(f64, f64),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
