//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation; `field` names the offender.
    #[error("invalid configuration for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A score table could not be ingested; `line` is 1-based.
    #[error("score table {path}, line {line}: {message}")]
    Ingest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("context distributions have disjoint supports; the shared space is undefined")]
    DisjointSupport,

    #[error("policy `{0}` is stochastic; use run_batch for Monte-Carlo estimates instead")]
    UnsupportedPolicy(String),

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("all paired differences are zero; the signed-rank statistic is undefined")]
    DegenerateSample,

    #[error("served an empty candidate set; retrieval is misconfigured")]
    EmptyCandidates,

    #[error("retrieval-degradation construction inapplicable: {0}")]
    InapplicableConstruction(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn argument(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }
}
