//! Conformal hyperbolic metrics with cone and cusp singularities on planar
//! domains, built from partial-fraction data
//! `h(z) = sum_j a_j / (z - z_j)`.
//!
//! The developing map `f(z) = i*lambda + int_base^z (-i h(w)) dw` takes values
//! in the upper half-plane for large enough `lambda`, and the pullback of
//! `|dw|^2 / (Im w)^2` is a metric of curvature -1 with a cusp at every pole
//! of `h` and a cone point of angle `2*pi*(1 + l)` at every zero of
//! multiplicity `l`. The modules here construct that metric and check each of
//! those statements numerically:
//!
//! * [`meromorphic`]: partial-fraction sums, certified tails, zero location.
//! * [`contour`]: circle quadrature, argument-principle counts, Laurent
//!   coefficients.
//! * [`developing`]: the developing map, branch-tracking paths, monodromy and
//!   the half-plane threshold.
//! * [`schwarzian`]: Schwarzian derivatives and singularity classification.
//! * [`metric`]: log-density sampling, curvature and cone-angle measurement.
//! * [`rouche`]: the Rouché comparison for the built-in `h0` family.

pub mod contour;
pub mod developing;
pub mod error;
pub mod meromorphic;
pub mod metric;
pub mod quadrature;
pub mod rouche;
pub mod schwarzian;

pub use num_complex::Complex64;

pub use contour::{Circle, Quadrature, Rect, WindingReport};
pub use developing::{DevelopingSample, Lambda0Estimate, PathIntegral, Polyline};
pub use error::{Error, Result};
pub use meromorphic::{
    Derivatives, Disc, Evaluation, H0Generator, MeromorphicSum, TailGenerator, Term, Truncation,
    TruncationPolicy, ZeroRecord, ZeroSearch,
};
pub use metric::{CurvatureReport, MetricGrid, Window};
pub use rouche::RoucheReport;
pub use schwarzian::{PrincipalPart, SingularityKind, SingularityReport, SingularitySource};

/// Shorthand for `Complex64::new`.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
