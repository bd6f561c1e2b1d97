use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} needs {requested} qubits (cap {cap})")]
    Capacity {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("training failed at step {step}: {reason}")]
    Training { step: usize, reason: String },
    #[error("post-selection kept none of {shots} shots")]
    PostSelection { shots: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
