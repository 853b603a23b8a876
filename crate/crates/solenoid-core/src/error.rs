use thiserror::Error;

/// Library-wide error type. Variants that abort a computation carry enough
/// context to name the offending object (address, cylinder, parameter).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolenoidError {
    #[error("invalid cylinder address {address:?}: {reason}")]
    Address { address: String, reason: String },

    #[error("transversal construction failed: {0}")]
    Construction(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("form degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("ambient dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("immersion condition violated: {0}")]
    Immersion(String),

    #[error("holonomy invariance fails: deviation {deviation:.3e} at depth {depth}")]
    NotInvariant { deviation: f64, depth: usize },

    #[error("model is not uniquely ergodic in the implemented sense: {0}")]
    NotUniquelyErgodic(String),

    #[error("tangential intersection in cylinder {cylinder}: {reason}")]
    Tangency { cylinder: String, reason: String },

    #[error(
        "almost-everywhere transversality refused: {reason} (mass bound {mass_bound:.6e} at depth {depth})"
    )]
    NotNullTransverse {
        reason: String,
        mass_bound: f64,
        depth: usize,
    },

    #[error("perturbation retries exhausted in cylinder {cylinder} after {attempts} samples (budget {budget:.3e})")]
    RetriesExhausted {
        cylinder: String,
        attempts: usize,
        budget: f64,
    },

    #[error("unsupported operation for this model family: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, SolenoidError>;
