use thiserror::Error;

/// Errors produced by the lattice, divergence, decomposition, bound and
/// dynamics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{x} is not a point of the lattice {offset} + k*{spacing}")]
    NonLatticePoint { x: f64, offset: f64, spacing: f64 },

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("lattice spacings differ: {0} vs {1}")]
    SpacingMismatch(f64, f64),

    #[error("lattices are not aligned: offset {offset_a}/spacing {spacing_a} vs offset {offset_b}/spacing {spacing_b}")]
    LatticeMismatch {
        offset_a: f64,
        spacing_a: f64,
        offset_b: f64,
        spacing_b: f64,
    },

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("sequence is empty")]
    EmptySequence,

    #[error("reference law vanishes at {0}, where the compared law has mass")]
    SupportViolation(f64),

    #[error("law is degenerate (zero variance)")]
    DegenerateLaw,

    #[error("variance {0} is not positive")]
    NonpositiveVariance(f64),

    #[error("Bernoulli-part decomposition needs unit spacing, got {0}")]
    UnitSpacingRequired(f64),

    #[error("exact enumeration over {n} summands exceeds the cap of {max}")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("horizon {0} must be at least 1")]
    InvalidHorizon(f64),

    #[error("expected a {expected} noise specification")]
    WrongKind { expected: &'static str },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
