use thiserror::Error;

/// Errors raised by the simulators, the correction algebra and protocol sessions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode index {mode} out of range for a {n_modes}-mode state")]
    InvalidMode { mode: usize, n_modes: usize },

    #[error("mode count mismatch: {0} vs {1}")]
    ModeMismatch(usize, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("parameter `{name}` = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("covariance matrix is singular (det = {0:e})")]
    SingularCovariance(f64),

    #[error("state violates the uncertainty relation (min eigenvalue {0:e})")]
    Unphysical(f64),

    #[error("operation supports single-mode states only (got {0} modes)")]
    SingleModeOnly(usize),

    #[error("truncation leak {leak:e} exceeds budget {budget:e}: {context}")]
    TruncationLeak {
        leak: f64,
        budget: f64,
        context: String,
    },

    #[error("Fock dimension {0} is below the minimum of 4")]
    DimensionTooSmall(usize),

    #[error("quadrature grid too coarse: marginal mass {0} < 0.999")]
    GridTooCoarse(f64),

    #[error("state has {0:e} of its Wigner mass outside the grid")]
    GridEscape(f64),

    #[error("density matrix not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("polynomial degree {0} exceeds the cap of {max}", max = crate::algebra::MAX_DEGREE)]
    DegreeCap(u32),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate probe design: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            min,
            max,
        })
    }
}
