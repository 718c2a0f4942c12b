use thiserror::Error;

/// Errors raised across the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("parameter state outside support: {0}")]
    OutsideSupport(String),

    #[error("non-finite value in filter at observation {index}")]
    NonFinite { index: usize },

    #[error("design matrix is numerically singular (condition number {condition:.3e})")]
    SingularDesign { condition: f64 },

    #[error("not enough data: need more than {needed} observations, got {got}")]
    NotEnoughData { needed: usize, got: usize },

    #[error("simulated path exploded after {attempts} attempts")]
    ExplosivePath { attempts: usize },

    #[error("{skipped} of {total} posterior draws produced non-finite predictions")]
    TooManySkipped { skipped: usize, total: usize },

    #[error("window error of the reference model is exactly zero at window {window}")]
    ZeroDenominator { window: usize },

    #[error("replication {rep} failed: {source}")]
    Replication {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("study cell {cell} failed: {failed} of {total} replications failed")]
    CellFailed {
        cell: String,
        failed: usize,
        total: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-positive price at line {line}")]
    NonPositivePrice { line: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }
    }
}

impl Error {
    /// Short machine-friendly name used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::OutsideSupport(_) => "OutsideSupport",
            Error::NonFinite { .. } => "NonFinite",
            Error::SingularDesign { .. } => "SingularDesign",
            Error::NotEnoughData { .. } => "NotEnoughData",
            Error::ExplosivePath { .. } => "ExplosivePath",
            Error::TooManySkipped { .. } => "TooManySkipped",
            Error::ZeroDenominator { .. } => "ZeroDenominator",
            Error::Replication { .. } => "ReplicationFailed",
            Error::CellFailed { .. } => "CellFailed",
            Error::Parse { .. } => "ParseError",
            Error::NonPositivePrice { .. } => "NonPositivePrice",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
