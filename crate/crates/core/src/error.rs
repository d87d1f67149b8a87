use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("signature conflict: `{name}` is used both as {first} and as {second}")]
    SignatureConflict {
        name: String,
        first: &'static str,
        second: &'static str,
    },

    #[error("inconsistent sample `{lso}` in domain `{domain}`: encoding refused")]
    InconsistentSample { domain: String, lso: String },

    #[error("domain `{0}` has no learning samples")]
    EmptyDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate labels in domain `{0}`: the training split has a single class")]
    DegenerateLabels(String),

    #[error("too few samples in domain `{domain}`: need {needed}, got {got}")]
    TooFewSamples { domain: String, needed: usize, got: usize },

    #[error(
        "feature width mismatch between `{source_domain}` ({source_width}) and `{target_domain}` ({target_width})"
    )]
    WidthMismatch {
        source_domain: String,
        source_width: usize,
        target_domain: String,
        target_width: usize,
    },

    #[error("single-class labels: AUC is undefined")]
    SingleClass,

    #[error("zero variance: correlation is not computable")]
    ZeroVariance,

    #[error("insufficient samples: {0} (need at least 3)")]
    InsufficientSamples(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("change rate undefined: the {0} closure is empty")]
    EmptyClosure(&'static str),

    #[error("evidence not entailed by source")]
    EvidenceNotInSource,

    #[error("knowledge base transport failure (retryable): {0}")]
    KbTransport(String),

    #[error("malformed {what} at {location}: {message}")]
    Malformed {
        what: &'static str,
        location: String,
        message: String,
    },

    #[error("missing artifact {0}; run the `{1}` stage first")]
    MissingArtifact(PathBuf, &'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: &'static str, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            location: location.into(),
            message: message.into(),
        }
    }

    /// Whether retrying the same call might succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::KbTransport(_))
    }
}
