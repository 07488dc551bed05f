use std::path::PathBuf;

use hedge_core::HedgeError;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("unknown preset `{name}`; known presets: {known}")]
    UnknownPreset { name: String, known: String },

    #[error(transparent)]
    Model(#[from] HedgeError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    #[error("no stream out of {tried} satisfied the `{screen}` screen")]
    ScreenExhausted { screen: String, tried: u64 },
}

pub type Result<T> = std::result::Result<T, CliError>;
