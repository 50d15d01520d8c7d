use thiserror::Error;

/// Errors raised by the capacity library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GcapError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent input (set specs, payload files, flags).
    #[error("validation error: {0}")]
    Validation(String),

    /// A truncated series hit its term cap before meeting the tolerance.
    #[error("series did not converge after {terms} terms (partial sum {partial_sum:e}, remainder bound {bound:e})")]
    Convergence {
        partial_sum: f64,
        bound: f64,
        terms: usize,
    },

    /// A result left its admissible range by more than the tolerance allows.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// The requested volatility regime has no closed form here.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// Finite-difference grid violates the explicit-scheme stability bound.
    #[error("grid configuration error: {0}")]
    Config(String),

    /// Non-finite values appeared during time stepping.
    #[error("numerical blow-up at step {step} (t = {time})")]
    Blowup { step: usize, time: f64 },

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
}

pub type Result<T> = std::result::Result<T, GcapError>;

impl GcapError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            GcapError::Convergence { .. }
            | GcapError::Blowup { .. }
            | GcapError::Consistency(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(GcapError::Domain(format!("{name} must be finite, got {x}")))
    }
}
