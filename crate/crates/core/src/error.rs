use thiserror::Error;

use crate::symbolic::Symbol;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (|det| of the row-scaled matrix is {det:e})")]
    SingularMatrix { det: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular value function exponent must be non-negative, got {0}")]
    NegativeExponent(f64),

    #[error("symbol {0} is not in the alphabet")]
    UnknownSymbol(Symbol),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("system is not diagonal (map for symbol {0} has off-diagonal entries)")]
    NotDiagonal(Symbol),

    #[error("measure is not Bernoulli")]
    NotBernoulli,

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("level sum would enumerate {words} words (cap {cap})")]
    TooLarge { words: f64, cap: f64 },

    #[error("no sign change of the pressure on [{low}, {high}]")]
    NoSignChange { low: f64, high: f64 },

    #[error("tail test inconclusive: {0}")]
    NoCertificate(String),

    #[error("degenerate fit at center {center}: {reason}")]
    DegenerateFit { center: usize, reason: String },

    #[error("log alpha_d is not integrable: the weighted series diverges")]
    IntegrabilityFailure,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}
