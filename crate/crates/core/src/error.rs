use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration; `path` names the offending field.
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Non-finite or otherwise unusable numerical input data.
    #[error("invalid data: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A model evaluation failed; carries the level and the offending input.
    #[error("model evaluation failed at level {level}: {message} (xi = {xi:?})")]
    Model {
        level: usize,
        xi: Vec<f64>,
        message: String,
    },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    /// The interpolative decomposition revealed rank zero.
    #[error("degenerate reduced basis at level {0}")]
    DegenerateBasis(usize),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::MissingArtifact(_) => 2,
            Error::Io(_) | Error::Serde(_) => 1,
            _ => 3,
        }
    }
}
