use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, AmicError>;

#[derive(Debug, thiserror::Error)]
pub enum AmicError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{row}: {msg}")]
    Parse { path: PathBuf, row: usize, msg: String },
    #[error("series is empty")]
    EmptySeries,
    #[error("series has {got} samples, need at least {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("timestamps mix epoch and RFC 3339 forms (first offending row {row})")]
    MixedTimestamps { row: usize },
    #[error("grid step must be positive")]
    ZeroGridStep,
    #[error("resolution {resolution}s is finer than the native grid step {step}s")]
    ResolutionTooFine { resolution: i64, step: i64 },
    #[error("series share no common timestamps")]
    EmptyIntersection,
    #[error("need at least {needed} points in the window, have {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("sample {idx} is already in the window")]
    DuplicatePoint { idx: u32 },
    #[error("sample {idx} is not in the window")]
    MissingPoint { idx: u32 },
    #[error("an input series has zero variance")]
    ZeroVariance,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
