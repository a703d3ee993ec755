use std::path::PathBuf;

/// Errors raised by the numerical routines, the trainer and the report I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{what} must be a finite value > 0, got {value}")]
    NonPositiveParam { what: &'static str, value: f64 },

    #[error("{0} activation is vector-valued and has no scalar evaluation")]
    NotScalar(&'static str),

    #[error("unknown activation `{0}`")]
    UnknownActivation(String),

    #[error("input must be non-empty")]
    EmptyInput,

    #[error(
        "{class} value {value} is not accepted; the binary32 decomposition needs a normal number"
    )]
    NotNormal { value: f32, class: &'static str },

    #[error("{what} = {value} is outside {range}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("lookup table size must be a power of two >= 2, got {0}")]
    InvalidLutSize(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("malformed IDX file {path}: {reason}")]
    Idx { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
