use std::path::PathBuf;

/// Errors produced by the localization pipeline and its I/O layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient reference nodes: need at least 3, got {got}")]
    InsufficientReferences { got: usize },

    #[error("degenerate anchor geometry (condition number {condition:e})")]
    DegenerateGeometry { condition: f64 },

    #[error("degenerate calibration fit: {0}")]
    DegenerateFit(String),

    #[error("observation out of order: t={got} precedes previous t={previous}")]
    OutOfOrder { previous: f64, got: f64 },

    #[error("no successful iteration to take an estimate from")]
    NoEstimate,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("observation log contains no rows")]
    EmptyLog,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report: {0}")]
    Report(#[from] serde_json::Error),
}

impl Error {
    /// Short stable identifier used as a machine-readable diagnostic prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidArgument(_) => "argument",
            Error::InsufficientReferences { .. } => "insufficient-references",
            Error::DegenerateGeometry { .. } => "degenerate-geometry",
            Error::DegenerateFit(_) => "degenerate-fit",
            Error::OutOfOrder { .. } => "ordering",
            Error::NoEstimate => "no-estimate",
            Error::Parse { .. } => "parse",
            Error::EmptyLog => "empty-log",
            Error::Io { .. } => "io",
            Error::Report(_) => "report",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
