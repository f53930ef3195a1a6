use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the waveform laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("invalid filter parameters: {0}")]
    InvalidFilter(String),

    #[error("sample rate mismatch: {0}")]
    RateMismatch(String),

    #[error("path delay of {delay_samples} samples exceeds the waveform span of {span} samples")]
    DelayExceedsSpan { delay_samples: usize, span: usize },

    #[error("time instant {0} s is not on the waveform sample grid or lies outside its span")]
    OffGrid(f64),

    #[error("chirp index C = {0} is not an integer; only quadrature evaluation is available")]
    NonIntegerChirpIndex(f64),

    #[error("unknown channel profile `{0}`")]
    UnknownProfile(String),

    #[error("tap support L = {taps} is not covered by the prefix length {prefix}")]
    PrefixTooShort { taps: usize, prefix: usize },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("config key `{key}`: {msg}")]
    ConfigKey { key: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn out_of_range(what: &'static str, detail: impl Into<String>) -> Self {
        Error::OutOfRange { what, detail: detail.into() }
    }
}
