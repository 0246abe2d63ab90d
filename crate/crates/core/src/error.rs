use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("uniformity must be at least 2, got {0}")]
    InvalidUniformity(usize),
    #[error("edge {edge} has {found} vertices, expected {expected}")]
    NonUniformEdge {
        edge: usize,
        expected: usize,
        found: usize,
    },
    #[error("vertex {vertex} out of range for {n} vertices")]
    OutOfRangeVertex { vertex: usize, n: usize },
    #[error("duplicate edge {0:?}")]
    DuplicateEdge(Vec<usize>),
    #[error("edge {edge} repeats vertex {vertex}")]
    DuplicateVertexInEdge { edge: usize, vertex: usize },
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("mixed uniformity: expected k = {expected}, found k = {found}")]
    MixedUniformity { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid JSON hypergraph: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid vertex ordering: {0}")]
    InvalidOrdering(String),

    #[error("{what} exceeded budget of {limit}")]
    BudgetExceeded { what: &'static str, limit: u64 },
    #[error("vertex {0} is both avoided and conditioned on")]
    DisjointnessViolated(usize),

    #[error("invalid conflict-free walk: {0}")]
    InvalidWalk(String),
    #[error("not a hypertree")]
    NotAHypertree,

    #[error("not extendable: {0}")]
    NotExtendable(String),
    #[error("no extendable graph with at most {max_n} vertices")]
    NotFound { max_n: usize },
    #[error("construction failed validation: {0}")]
    ConstructionAmbiguous(String),

    #[error("exact denominator would reach {bits} bits (budget {budget}); use the rounded trajectory instead")]
    RationalBlowup { bits: u64, budget: u64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("f_d(x) = x has no three fixed points for k = {k}, d = {d}")]
    NoThreeFixedPoints { k: usize, d: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
