use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate embedding: l2 norm {norm:e} is not above {eps:e}")]
    DegenerateEmbedding { norm: f64, eps: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// The reliable set of the current batch is empty; losses are undefined.
    #[error("reliable set is empty")]
    EmptyReliableSet,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown corruption kind `{0}`")]
    UnknownCorruption(String),

    #[error("end of stream at batch {0}")]
    EndOfStream(usize),

    #[error("archive parse error at byte {offset}: {message}")]
    Archive { offset: u64, message: String },

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {context}: {source}")]
    Csv {
        context: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }

    /// Stable short tag used in machine-readable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::DegenerateEmbedding { .. } => "degenerate_embedding",
            Error::NonFinite(_) => "non_finite",
            Error::EmptyReliableSet => "empty_reliable_set",
            Error::Config(_) => "config",
            Error::UnknownCorruption(_) => "unknown_corruption",
            Error::EndOfStream(_) => "end_of_stream",
            Error::Archive { .. } => "archive",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
        }
    }
}
