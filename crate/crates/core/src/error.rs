use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("line {line}: unknown outcome {value:?}")]
    InvalidOutcome { line: usize, value: String },
    #[error("stop {0}: stop-level features differ between its services")]
    InconsistentStopFeatures(String),
    #[error("empty class: {0}")]
    EmptyClass(String),
    #[error("SMOTE needs at least 2 minority rows, found {0}")]
    TooFewMinority(usize),
    #[error("training data contains a single class")]
    DegenerateTraining,
    #[error("row width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("antecedent has zero support in the failed set")]
    ZeroSupport,
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) => ErrorKind::Usage,
            Error::Stage { source, .. } => source.kind(),
            Error::Internal(_) => ErrorKind::Internal,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::InvalidOutcome { .. }
            | Error::InconsistentStopFeatures(_)
            | Error::EmptyClass(_)
            | Error::TooFewMinority(_)
            | Error::DegenerateTraining
            | Error::WidthMismatch { .. }
            | Error::ZeroSupport
            | Error::UndefinedMetric(_)
            | Error::ModelFormat(_) => ErrorKind::Data,
        }
    }

    /// Wraps the error with the name of the pipeline stage it came from.
    pub fn context(self, stage: impl Into<String>) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
