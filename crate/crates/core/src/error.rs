use thiserror::Error;

/// Errors raised by the deepmod core.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, sizes or settings that cannot describe a valid graph, channel or run.
    #[error("configuration error: {0}")]
    Config(String),
    /// Caller-supplied data outside an operation's domain.
    #[error("input error: {0}")]
    Input(String),
    /// Broken internal invariant (for example an optimizer step without gradients).
    #[error("internal error: {0}")]
    Internal(String),
    /// The two nodes disagree about the shared training schedule.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// A loss became non-finite during training.
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
    /// Malformed or incompatible checkpoint file.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
