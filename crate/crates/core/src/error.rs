use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grids differ between operands")]
    GridMismatch,
    #[error("node index {index} out of range (nodes 0..={last})")]
    Index { index: usize, last: usize },
    #[error("function is not convex at node {node} (second difference {value:e})")]
    NotConvex { node: usize, value: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("invalid interval: {0}")]
    Cfi(String),
    #[error("function is not a member of the interval: {0}")]
    NotMember(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
