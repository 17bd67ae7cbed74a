//! CLI error taxonomy: each config failure mode is a distinct variant so
//! callers and tests can tell them apart.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config `{path}`: {source}")]
    MissingFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("unknown config key: {0}")]
    UnknownKey(String),
    #[error("config value out of range: `{key}` {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("cannot write output `{path}`: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Simulation(#[from] ghz_optics::Error),
    #[error("{0}")]
    Internal(String),
}
