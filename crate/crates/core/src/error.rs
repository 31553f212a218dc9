//! Crate-wide error type.

use crate::regression::FittedNodeModel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node id {node} out of range 1..={num_nodes}")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("move {0} is not applicable to this graph")]
    InapplicableMove(String),

    #[error("move {0} would create a directed cycle")]
    WouldCreateCycle(String),

    #[error("exhaustive enumeration supports at most {max} nodes, got {given}")]
    TooManyNodes { given: usize, max: usize },

    #[error("requested {given} edges but at most {max} fit a topological order")]
    TooManyEdges { given: usize, max: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate column {name:?}: {msg}")]
    DegenerateColumn { name: String, msg: String },

    #[error("target node {node} has fewer than 2 observed levels")]
    DegenerateTarget { node: usize },

    /// The likelihood is maximized at the parameter bound (perfect prediction).
    /// Carries the fit evaluated at the clamped parameters so callers can
    /// assign a finite penalized score.
    #[error("separation detected: parameter magnitude exceeded the bound")]
    Separation(Box<FittedNodeModel>),

    #[error("parameter vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parent {parent} received code {code}, valid range is 1..={levels}")]
    InvalidParentCode {
        parent: usize,
        code: usize,
        levels: usize,
    },

    #[error("graphs have different node counts: {left} vs {right}")]
    NodeCountMismatch { left: usize, right: usize },

    #[error("lists have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("all truth labels belong to a single class")]
    DegenerateLabels,

    #[error("tables have different shapes: {left} vs {right} entries")]
    ShapeMismatch { left: usize, right: usize },

    #[error("table sums to {sum}, expected 1 within 1e-9")]
    NotNormalized { sum: f64 },
}
