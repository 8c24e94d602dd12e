use std::path::PathBuf;

use thiserror::Error;

/// Per-epoch losses recorded while training; attached to training failures.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochLoss>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean primary loss (critic loss for the GAN, MSE for regressors).
    pub loss: f64,
    /// Secondary loss (generator loss for the GAN, unused otherwise).
    pub aux: f64,
}

impl TrainingTrace {
    pub fn push(&mut self, epoch: usize, loss: f64, aux: f64) {
        self.epochs.push(EpochLoss { epoch, loss, aux });
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    /// Shape or calling-convention violation between components.
    #[error("contract error: {0}")]
    Contract(String),

    #[error("training failed: {message}")]
    Training { message: String, trace: TrainingTrace },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Serde(_) => 1,
            Error::Data(_) | Error::Io { .. } | Error::Contract(_) => 2,
            Error::Training { .. } => 3,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}
