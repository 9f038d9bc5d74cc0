use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the numerical routines.
///
/// Evaluation close to a singular point is always reported as an error rather
/// than returned as a huge (and meaningless) number.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {z} lies within the guard distance {guard:e} of pole {pole}")]
    PoleProximity {
        z: Complex64,
        pole: Complex64,
        guard: f64,
    },

    #[error("point {z} lies too close to a zero of h (|h| = {modulus:e})")]
    ZeroProximity { z: Complex64, modulus: f64 },

    #[error("tail cannot be bounded: {0}")]
    TailUnboundable(String),

    #[error("zero or pole on a contour: {0}")]
    BoundaryDegeneracy(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("non-finite integrand sample at {z}")]
    NonFinite { z: Complex64 },

    #[error("pole separation {separation:e} leaves no room for a loop of radius {radius:e}")]
    SeparationTooSmall { separation: f64, radius: f64 },

    #[error("segment {segment} of the path passes within {distance:e} of pole {pole}")]
    PathThroughPole {
        segment: usize,
        pole: Complex64,
        distance: f64,
    },

    #[error("|f'({z})| = {modulus:e} is too small for a Schwarzian")]
    DegenerateDerivative { z: Complex64, modulus: f64 },

    #[error("c2 = {c2} admits no real cone angle")]
    NonHyperbolicExponent { c2: Complex64 },

    #[error("Im f = {im_f:e} <= 0 at {z}; lambda is below the admissible threshold")]
    HalfPlaneViolation { z: Complex64, im_f: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
