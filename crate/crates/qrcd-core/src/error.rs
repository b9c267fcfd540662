//! Crate-wide error type with CLI exit-code mapping.

/// Errors surfaced by any stage of the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad usage, malformed configuration, or stale run artifacts.
    #[error("config error: {0}")]
    Config(String),

    /// Unparseable or inconsistent input data (files, CSV, caches).
    #[error("format error: {0}")]
    Format(String),

    /// Shape or length mismatch between operands.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Input values outside the encodable range.
    #[error("encoding error: {0}")]
    Encoding(String),

    /// A numerical routine failed to meet its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 usage/config, 2 data/format, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Format(_) | Error::Dimension(_) | Error::Encoding(_) | Error::Io(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
