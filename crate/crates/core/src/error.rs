use thiserror::Error;

/// Errors raised by the filtering, simulation and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or cardinality parameter lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical quantity became singular, non-finite or non-positive.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An API was called with arguments that do not fit together.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    /// A numerical failure inside a Monte-Carlo run, with its location.
    #[error("trial {trial}, step {step}, filter {filter}: {source}")]
    Run {
        trial: usize,
        step: usize,
        filter: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
