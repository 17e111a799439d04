use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter or point is outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation requested at (or too close to) a kernel singularity.
    #[error("singularity: {0}")]
    Singularity(String),

    /// Adaptive refinement stopped before the tolerance was met. The partial
    /// value and the achieved error estimate are reported.
    #[error("quadrature did not converge: value {value}, error estimate {err_estimate}")]
    QuadNonConverged { value: f64, err_estimate: f64 },

    /// The declared decay class is incompatible with the requested integral.
    #[error("decay class incompatible with convergence: {0}")]
    DecayIncompatible(String),

    /// No closed-form derivative is available and the field is not declared
    /// smooth enough for finite differences.
    #[error("missing derivative: {0}")]
    MissingDerivative(String),

    /// A manufactured construction was rejected (e.g. drift not in L^n).
    #[error("inadmissible construction: {0}")]
    Inadmissible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
