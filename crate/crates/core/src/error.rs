use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FcgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FcgError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("crack growth direction undefined: both stress intensity factors are zero")]
    UndefinedDirection,

    #[error("crack does not propagate at step {step} (zero driving force)")]
    NonPropagating { step: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite gradient in parameter block `{block}`")]
    PoisonedUpdate { block: String },

    #[error("{stage} training diverged at epoch {epoch}")]
    Diverged { stage: &'static str, epoch: usize },

    #[error("regression targets have zero variance")]
    DegenerateTarget,

    #[error("observation step {got} does not follow previous step {previous}")]
    UnorderedObservation { previous: usize, got: usize },

    #[error("{failed} of {attempted} simulations failed; aborting library generation")]
    TooManyFailures { failed: usize, attempted: usize },

    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("format version mismatch in {path}: found {found}, expected {expected}")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("truncated file {path}: {detail}")]
    Truncated { path: PathBuf, detail: String },

    #[error("checksum mismatch in {path}")]
    Checksum { path: PathBuf },

    #[error("sample `{sample_id}` is missing its data file {path}")]
    MissingPart { sample_id: String, path: PathBuf },

    #[error("malformed file {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FcgError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FcgError::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        FcgError::Shape(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        FcgError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FcgError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        FcgError::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// Stable, machine-parsable error class.
    pub fn class(&self) -> &'static str {
        match self {
            FcgError::Config { .. } => "config",
            FcgError::Io { .. } => "io",
            FcgError::VersionMismatch { .. } => "version",
            FcgError::Truncated { .. } | FcgError::Checksum { .. } | FcgError::Format { .. } => {
                "format"
            }
            FcgError::MissingPart { .. } => "missing",
            FcgError::Shape(_) => "shape",
            FcgError::Domain(_)
            | FcgError::UndefinedDirection
            | FcgError::NonPropagating { .. }
            | FcgError::UnorderedObservation { .. } => "domain",
            FcgError::PoisonedUpdate { .. }
            | FcgError::Diverged { .. }
            | FcgError::DegenerateTarget
            | FcgError::TooManyFailures { .. } => "numerical",
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            "io" => 3,
            "version" => 4,
            "format" => 5,
            "missing" => 6,
            "shape" => 7,
            "domain" => 8,
            "numerical" => 9,
            _ => 1,
        }
    }
}
