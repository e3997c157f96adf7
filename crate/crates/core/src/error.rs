use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("relation index {index} out of range (structure has {m} relations)")]
    RelationIndex { index: usize, m: usize },
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("arity mismatch: ({0}, {1}) relations/constants versus ({2}, {3})")]
    ArityMismatch(usize, usize, usize, usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("constants {0} and {1} fall into the same block")]
    ConstantsMerged(usize, usize),
    #[error("map is not a bijection")]
    NotBijective,
    #[error("structure has {0} constants, expected none")]
    HasConstants(usize),
    #[error("relation {0} is not surjective")]
    NotSurjective(usize),
    #[error("structure is not in {family}: {reason}")]
    NotInFamily { family: String, reason: String },
    #[error("map domain/codomain mismatch: {0}")]
    CodomainMismatch(String),
    #[error("spiral parameters out of range: p={p}, q={q}, r={r} (need p, r > 1 and q >= 1)")]
    SpiralParams { p: usize, q: usize, r: usize },
    #[error("cover multiplier {got} differs from the group exponent {expected}")]
    ExponentMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("element {element} pinned at point {point} is not idempotent")]
    NonIdempotentPin { point: usize, element: usize },
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
    #[error("permutation moves marked point {0}")]
    MarkedPointMoved(usize),
    #[error("value at point {0} is not an automorphism of the carrier")]
    NotAutomorphism(usize),
    #[error("group action is not faithful")]
    NotFaithful,
    #[error("precondition violated: {0}")]
    Precondition(String),
}
