use crate::index::IndexVec;
use crate::workdiv::{Origin, Unit};

/// Errors raised by the library.
///
/// Usage errors (bad arguments, contract violations detected before any work
/// is done) are kept apart from resource errors and from failures of a task
/// that was already running.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension must be 1, 2 or 3, got {0}")]
    InvalidDim(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("index {index} is out of range for extent {extent}")]
    IndexOutOfRange { index: IndexVec, extent: IndexVec },

    #[error("linear index {index} is out of range for extent {extent}")]
    LinearOutOfRange { index: usize, extent: IndexVec },

    #[error("extent {0} has a zero component")]
    ZeroExtent(IndexVec),

    #[error("unsupported (origin, unit) pair ({0}, {1})")]
    UnsupportedPair(Origin, Unit),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element type of size {requested} does not match buffer element size {actual}")]
    ElementSize { requested: usize, actual: usize },

    #[error("buffer is still referenced by a pending task or an outstanding view")]
    BufferInUse,

    #[error("allocation of {0} bytes failed")]
    Alloc(usize),

    #[error("task device {task} is not compatible with queue device {queue}")]
    DeviceMismatch { task: String, queue: String },

    #[error("queue has been shut down")]
    QueueShutDown,

    #[error("kernel failed: {0}")]
    KernelFailed(String),

    #[error("io: {0}")]
    Io(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    /// True for errors caused by the caller rather than by a running task or
    /// by the environment.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::Alloc(_) | Error::KernelFailed(_) | Error::Io(_) | Error::Csv(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
