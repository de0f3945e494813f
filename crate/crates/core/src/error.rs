use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("prompt: {0}")]
    Prompt(String),

    #[error("rules: {0}")]
    Rules(String),

    #[error("selection: {0}")]
    Selection(String),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("vocabulary: {0}")]
    Vocabulary(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),

    #[error("pair `{pair_id}`: {source}")]
    Pair {
        pair_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Path { path: path.to_path_buf(), source }
    }
}
