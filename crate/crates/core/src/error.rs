use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid domain topology: {0}")]
    Topology(String),

    #[error("triangulation failed: {0}")]
    Triangulation(String),

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("boundary partition failed: {0}")]
    Partition(String),

    #[error("laplace system is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("linear solve for coordinate {column} has relative residual {residual:e}")]
    Numerical { column: usize, residual: f64 },

    #[error("invalid generator: {0}")]
    Generator(String),

    #[error("invalid coordinate rows: {0}")]
    Rows(String),

    #[error("planner: {0}")]
    Planner(String),

    #[error("routing: {0}")]
    Routing(String),

    #[error("greedy property violated at site {at} while routing to {target}")]
    GreedyViolation { at: usize, target: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
