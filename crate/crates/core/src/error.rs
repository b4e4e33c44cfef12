use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("degenerate lattice")]
    DegenerateLattice,

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("non-primitive sublattice")]
    NonPrimitiveSublattice,

    #[error("enumeration requires definite lattice")]
    IndefiniteEnumeration,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("discriminant group mismatch")]
    GroupMismatch,

    #[error("coset {0} is not an element of the discriminant group")]
    UnknownCoset(String),

    #[error("support-law violation: {0}")]
    SupportLaw(String),

    #[error("tau must lie in the upper half-plane")]
    NotUpperHalfPlane,

    #[error("missing coefficient at exponent {0}")]
    MissingCoefficient(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("bound exceeded: {0}")]
    BoundExceeded(String),

    #[error("outside certified region: {0}")]
    OutsideCertifiedRegion(String),

    #[error("precision unachievable: {0}")]
    Precision(String),

    #[error("no optimal embedding: {0}")]
    NoEmbedding(String),

    #[error("order saturation failed: {0}")]
    Saturation(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
