use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid road: {0}")]
    InvalidRoad(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("test generation exhausted after {attempts} rejected candidates")]
    GenerationExhausted { attempts: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Parse { path: String, message: String },
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
