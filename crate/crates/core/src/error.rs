use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing operand: vertex `{0}` has no bound tensor")]
    MissingOperand(String),
    #[error("invalid contraction: {0}")]
    InvalidContraction(String),
    #[error("invalid distribution: variance must be positive, got {0}")]
    InvalidDistribution(f64),
    #[error("invalid cut query: vertex sets overlap")]
    InvalidCutQuery,
    #[error("unsupported sketch dimension `{0}`: a sketched edge must be dangling and incident to exactly one vertex")]
    UnsupportedSketchDimension(String),
    #[error("sketch dimension smaller than sketch size: edge `{edge}` has size {size} < m = {m}")]
    SketchDimensionTooSmall { edge: String, size: usize, m: usize },
    #[error("nothing to sketch: no sketch edges given")]
    NothingToSketch,
    #[error("not a graph embedding: edge `{0}` joins more than two embedding vertices")]
    NotAGraphEmbedding(String),
    #[error("plan/data inconsistency: {0}")]
    PlanDataInconsistency(String),
    #[error("oracle too large: {entries} entries exceeds limit {limit}")]
    OracleTooLarge { entries: u128, limit: u128 },
    #[error("uniform lower bound inapplicable: data vertex `{0}` has no sketch edge")]
    UniformBoundInapplicable(String),
    #[error("sketch exceeds subspace: m = {m} but the sketched dimension is {dim}")]
    SketchExceedsSubspace { m: usize, dim: usize },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid contraction tree: {0}")]
    InvalidTree(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return Error::Io(e.to_string());
        }
        Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
