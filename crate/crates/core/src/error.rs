use thiserror::Error;

/// Errors shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not a pure qubit state: {0}")]
    InvalidState(String),

    #[error("invalid prior probabilities: {0}")]
    InvalidPriors(String),

    #[error("POVM does not resolve the identity: {0}")]
    CompletenessViolation(String),

    #[error("negative frequency omega = {omega} at element {index}")]
    NegativeFrequency { index: usize, omega: f64 },

    #[error("POVM element {index} is not a projector direction (|gamma| = {length}, want 1/2)")]
    NonProjectorElement { index: usize, length: f64 },

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("degenerate denominator A = p_j at state {index}")]
    DegenerateDenominator { index: usize },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("no admissible root")]
    NoAdmissibleRoot,

    #[error("iteration did not converge")]
    NoConvergence,

    #[error("denominator 1/2 + 2 gamma_j . R vanishes at element {0}")]
    DenominatorVanishes(usize),

    #[error("construction yields non-positive prior at element {0}")]
    NonPositivePrior(usize),

    #[error("optimality certificate failed on the constructed problem")]
    CertificateFailed,

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
