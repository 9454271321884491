use thiserror::Error;

/// Every failure the library can report.
///
/// Variants fall into two families that the CLI maps to distinct exit codes:
/// domain/configuration problems (bad parameters, malformed documents,
/// structural violations) and oracle problems (transport failures, missing
/// fixture labels).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("parse error at node \"{path}\": {message}")]
    Parse { path: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("oracle transport error: {message}")]
    Transport { message: String, retryable: bool },

    #[error("missing label for example {0}")]
    MissingLabel(String),

    #[error("training set aborted after {completed} of {requested} queries: {source}")]
    PartialTrainingSet {
        completed: usize,
        requested: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn is_oracle_failure(&self) -> bool {
        match self {
            Error::Transport { .. } | Error::MissingLabel(_) => true,
            Error::PartialTrainingSet { source, .. } => source.is_oracle_failure(),
            _ => false,
        }
    }

    /// Process exit code: 2 for oracle/transport failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_oracle_failure() {
            2
        } else {
            1
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
