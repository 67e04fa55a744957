use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A channel momentum vanished where the equations divide by it.
    #[error("singular channel: {what} at sideband n = {channel}")]
    SingularChannel { what: &'static str, channel: i32 },

    /// A linear system was singular or too ill-conditioned to trust.
    #[error("ill-conditioned linear system (pivot ratio estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },

    /// An iteration landed too close to a pole of the residual.
    #[error("residual pole: |{what}| = {magnitude:.3e}")]
    PoleProximity { what: &'static str, magnitude: f64 },

    /// The root finder ran out of iterations.
    #[error(
        "root finder did not converge after {iterations} iterations; \
         best iterate {best_re:.9e}{best_im:+.9e}i with |residual| = {residual:.3e}"
    )]
    NonConvergence {
        iterations: usize,
        best_re: f64,
        best_im: f64,
        residual: f64,
    },

    /// A computation produced a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Invalid configuration or input data.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Branch tracing lost the root and could not refine further.
    #[error("continuation stalled at omega = {omega:.9e}: {reason}")]
    ContinuationStalled { omega: f64, reason: String },

    /// The crossing classifier could not decide between direct and avoided.
    #[error("crossing classification failed: {0}")]
    Classification(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn non_convergence(iterations: usize, best: Complex64, residual: f64) -> Self {
        Error::NonConvergence {
            iterations,
            best_re: best.re,
            best_im: best.im,
            residual,
        }
    }

    /// Best iterate carried by a [`Error::NonConvergence`] error, if any.
    pub fn best_iterate(&self) -> Option<Complex64> {
        match self {
            Error::NonConvergence {
                best_re, best_im, ..
            } => Some(Complex64::new(*best_re, *best_im)),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
