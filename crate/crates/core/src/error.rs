//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by callers (the CLI maps these to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid configuration or argument values.
    Config,
    /// Bad or missing input data (files, manifests, WAVs, weight files).
    Data,
    /// Violated numerical contract (shape mismatch, instability, NaN).
    Numeric,
}

#[derive(Debug)]
pub enum Error {
    /// Shape or precondition violation on a numerical operation.
    Shape(String),
    /// Invalid configuration value.
    Config(String),
    /// File or parse problem.
    Data(String),
    /// Numerical failure at runtime (NaN loss, unstable recurrence, ...).
    Numeric(String),
    /// Weight file carries a format version this build does not support.
    Version { found: u32, supported: u32 },
    /// Weight file is missing a tensor the configured model requires.
    MissingTensor(String),
    /// Weight file has a tensor whose shape conflicts with the configuration.
    TensorShape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    Io(std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Shape(_) | Error::Numeric(_) => ErrorKind::Numeric,
            Error::Config(_) => ErrorKind::Config,
            Error::Data(_)
            | Error::Version { .. }
            | Error::MissingTensor(_)
            | Error::TensorShape { .. }
            | Error::Io(_) => ErrorKind::Data,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Version { found, supported } => write!(
                f,
                "unsupported weight file version {found} (this build reads version {supported})"
            ),
            Error::MissingTensor(name) => write!(f, "weight file is missing tensor `{name}`"),
            Error::TensorShape {
                name,
                expected,
                got,
            } => write!(
                f,
                "tensor `{name}` has shape {got:?}, expected {expected:?}"
            ),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
