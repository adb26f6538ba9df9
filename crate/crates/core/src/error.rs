//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("node {node} out of range (node_count = {node_count})")]
    NodeOutOfRange { node: u64, node_count: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("evaluation failed: {0}")]
    Eval(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("step '{step}' failed: {source}")]
    Step { step: &'static str, source: Box<Error> },
}

impl Error {
    /// Tag an error with the pipeline step it came from.
    pub fn in_step(self, step: &'static str) -> Error {
        Error::Step { step, source: Box::new(self) }
    }
}
