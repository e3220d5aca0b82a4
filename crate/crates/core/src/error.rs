use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: String, reason: String },

    #[error("placement failed for {what}: {reason}")]
    Placement { what: String, reason: String },

    #[error("fairness index undefined: {0}")]
    FairnessUndefined(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("report error: {0}")]
    Report(String),

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Param {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            reason: err.to_string(),
        }
    }

    /// True for errors caused by the configuration rather than by a run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Param { .. })
    }
}
