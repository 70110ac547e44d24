use thiserror::Error;

/// Errors surfaced by the analysis routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid ring configuration: {0}")]
    Config(String),

    #[error("outside the domain of validity: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {worst_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
    },

    #[error("polished eigenvalue {polished} disagrees with oracle value {oracle} by {gap:.3e}")]
    FormulaMismatch {
        polished: num_complex::Complex64,
        oracle: num_complex::Complex64,
        gap: f64,
    },

    #[error("degenerate quasi-momentum: {0}")]
    Degenerate(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

impl Error {
    /// True for errors that stem from the caller's input rather than from the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Precondition(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
