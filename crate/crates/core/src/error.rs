use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site count must be even and within [{min}, {max}], got {n}")]
    InvalidSiteCount { n: usize, min: usize, max: usize },

    #[error("momentum sectors require periodic boundary conditions")]
    OpenBoundary,

    #[error("momentum index {k} is not valid for N = {n}")]
    InvalidMomentum { k: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operators act on different bases")]
    BasisMismatch,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("sector with momentum index {0} is not real; use the complex projection")]
    ComplexSector(usize),

    #[error("projection has imaginary residue {0:e}: gauge error")]
    GaugeResidue(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("perturbation range R = {r} outside [2, {max}]")]
    InvalidRange { r: usize, max: usize },

    #[error("site or distance out of range: {0}")]
    SiteOutOfRange(String),

    #[error("state has weight {0:e} outside the provided sectors")]
    SupportLeakage(f64),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("empty averaging window [{0}, {1}]")]
    EmptyWindow(f64, f64),

    #[error("forward-scattering ladder terminated early at step {0}")]
    LadderTerminated(usize),

    #[error("integer overflow while counting configurations")]
    CountOverflow,

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("eigenstate check failed: residual {0:e}")]
    NotEigenstate(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
