use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} is outside [0, 1]")]
    TimeDomain { t: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "bridge drift is singular at t = {t}: beta_1 - beta_t = {gap:e} is below the guard {guard:e}; clip t away from 1"
    )]
    Singularity { t: f64, gap: f64, guard: f64 },

    #[error("diffusivity schedule is degenerate (beta_1 = 0); bridges are undefined")]
    DegenerateSchedule,

    #[error("non-finite drift at step {step} (t = {t}): state norm {state_norm:e}")]
    NonFiniteDrift {
        step: usize,
        t: f64,
        state_norm: f64,
    },

    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("non-finite loss at iteration {iter}: total = {total}, regression = {regression}, regularization = {regularization}, mean |m|^2 = {mean_m_sq}")]
    NonFiniteLoss {
        iter: usize,
        total: f64,
        regression: f64,
        regularization: f64,
        mean_m_sq: f64,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("model file: unsupported format version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model file: checksum mismatch")]
    Checksum,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// True for failures caused by the numbers themselves rather than inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singularity { .. }
                | Error::NonFiniteDrift { .. }
                | Error::NonFiniteActivation { .. }
                | Error::NonFiniteLoss { .. }
        )
    }
}
