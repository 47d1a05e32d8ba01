//! Crate-wide error type.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty label name")]
    EmptyLabel,

    #[error("unknown label {label:?}{}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    UnknownLabel { label: String, line: Option<usize> },

    #[error("example text is empty")]
    EmptyText,

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("file {path} contains no records")]
    EmptyFile { path: PathBuf },

    #[error("duplicate text in pool: {text:?}")]
    DuplicatePoolText { text: String },

    #[error("split size {size} is not divisible by the {labels}-label set")]
    UnevenSplit { size: usize, labels: usize },

    #[error("need {needed} examples labeled {label:?} but only {available} available")]
    InsufficientExamples {
        label: String,
        needed: usize,
        available: usize,
    },

    #[error("prompt estimated at {estimated} tokens exceeds the {limit}-token budget")]
    TokenBudget { estimated: usize, limit: usize },

    #[error("invalid completion request: {0}")]
    InvalidRequest(String),

    #[error("invalid backend configuration: {0}")]
    InvalidBackendConfig(String),

    #[error("backend returned {text:?}, which is not an allowed token")]
    RestrictionViolated { text: String },

    #[error("backend request failed after {attempts} attempts: {message}")]
    BackendExhausted { attempts: u32, message: String },

    #[error("backend returned HTTP status {status}: {body}")]
    BackendStatus { status: u16, body: String },

    #[error("backend transport error: {0}")]
    Transport(String),

    #[error("backend returned an empty completion")]
    EmptyCompletion,

    #[error("seed triplet must contain exactly 3 examples, got {0}")]
    BadSeedCount(usize),

    #[error("seed triplet mixes labels {first:?} and {second:?}")]
    MixedSeedLabels { first: String, second: String },

    #[error("duplicate allele text in candidate: {text:?}")]
    DuplicateAllele { text: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("candidate has no recorded fitness")]
    UnevaluatedCandidate,

    #[error("could not generate a fresh allele after {attempts} attempts")]
    AlleleGenerationExhausted { attempts: u32 },

    #[error("need at least {needed} values, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid value for {key:?} in grid config: {message}")]
    GridConfig { key: String, message: String },

    #[error("{0}")]
    Other(String),
}

impl Error {
    /// Wrap an I/O error with a short human context string.
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
