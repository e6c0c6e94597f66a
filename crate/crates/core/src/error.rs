use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("invalid route: {0}")]
    InvalidRoute(String),

    #[error("invalid model input: {0}")]
    Model(String),

    #[error("assignment is missing variable `{0}`")]
    MissingVariable(String),

    #[error("successor chain does not return to the depot; stranded nodes: {0:?}")]
    Subtour(Vec<usize>),

    #[error("subproblem has {n} customers, exact solver limit is {max}")]
    SizeLimit { n: usize, max: usize },

    #[error("instance infeasible: customer {customer} cannot be served alone ({reason})")]
    InstanceInfeasible { customer: usize, reason: String },

    #[error("bks must be positive, got {0}")]
    InvalidBks(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
