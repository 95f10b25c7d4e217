use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("logic error: {0}")]
    Logic(String),

    /// Loss became non-finite during training, usually a learning rate that is too large.
    #[error("training diverged at epoch {epoch} (loss = {loss}); try a smaller learning rate")]
    Diverged { epoch: usize, loss: f64 },

    #[error("no epsilon on the grid keeps accuracy >= {floor:.4} for hidden node {hidden}")]
    Discretization { hidden: usize, floor: f64 },

    #[error("rule composition failed: {0}")]
    Composition(String),

    #[error("{0}")]
    Rules(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
