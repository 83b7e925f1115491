use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("XML parse error at byte {offset}: {message}")]
    Xml { offset: usize, message: String },

    #[error("document is missing required element `{0}`")]
    MissingElement(&'static str),

    #[error("paper `{0}` has neither an abstract nor any body paragraph")]
    MissingText(String),

    #[error("year {year} outside corpus range [{lo}, {hi}]")]
    YearOutOfRange { year: i32, lo: i32, hi: i32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for table with {len} rows")]
    Index { index: usize, len: usize },

    #[error("non-finite numeric input: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("query `{query_id}` needs {needed} negative candidates but only {available} are available")]
    Shortage {
        query_id: String,
        needed: usize,
        available: usize,
    },

    #[error("requested {requested} test items but only {available} eligible queries are available")]
    InsufficientQueries { requested: usize, available: usize },

    #[error("unknown label `{0}`")]
    Label(String),

    #[error("prediction sets are not aligned; missing keys: {0:?}")]
    Alignment(Vec<String>),

    #[error("kappa is undefined: expected agreement equals 1")]
    UndefinedKappa,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
