//! Shared quadrature kernels: Gauss–Legendre on straight complex segments and
//! order-independent summation.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

const GL_ORDER: usize = 15;
/// Cap on bisections per call, whatever the depth allowance.
const PANEL_BUDGET: usize = 1 << 15;

fn gl_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(GL_ORDER).unwrap())
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Result of an adaptive segment integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentIntegral {
    pub value: Complex64,
    pub error: f64,
}

/// Fixed-order Gauss–Legendre estimate of `int_a^b g(z) dz` along the straight
/// segment from `a` to `b`.
pub fn gauss_legendre_segment<F>(g: &F, a: Complex64, b: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let half = (b - a) * 0.5;
    let mid = (a + b) * 0.5;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x, w) in gl_rule() {
        let z = mid + half * x;
        let v = g(z);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { z });
        }
        acc += v * w;
    }
    Ok(acc * half)
}

/// Adaptive bisection on top of [`gauss_legendre_segment`].
///
/// A panel is accepted when the two-halves estimate agrees with the whole-panel
/// estimate to within its share of `tol` (or to rounding level). Panels at the
/// depth cap (or once the panel budget is spent) are kept with their estimate;
/// the call fails only when the summed estimate exceeds `tol` plus the summed
/// rounding floors, which is what happens at a genuine singularity.
pub fn adaptive_segment<F>(
    g: &F,
    a: Complex64,
    b: Complex64,
    tol: f64,
    max_depth: u32,
) -> Result<SegmentIntegral>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    if a == b {
        return Ok(SegmentIntegral {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        });
    }
    let whole = gauss_legendre_segment(g, a, b)?;
    let mut budget = PANEL_BUDGET;
    let (out, noise) = refine(g, a, b, whole, tol, max_depth, &mut budget)?;
    if !(out.error <= tol + noise) {
        return Err(Error::NonConvergence(format!(
            "adaptive quadrature on [{a}, {b}] stalled with error {:e}",
            out.error
        )));
    }
    Ok(out)
}

fn refine<F>(
    g: &F,
    a: Complex64,
    b: Complex64,
    whole: Complex64,
    tol: f64,
    depth_left: u32,
    budget: &mut usize,
) -> Result<(SegmentIntegral, f64)>
where
    F: Fn(Complex64) -> Complex64 + ?Sized,
{
    let m = (a + b) * 0.5;
    let left = gauss_legendre_segment(g, a, m)?;
    let right = gauss_legendre_segment(g, m, b)?;
    let fine = left + right;
    let err = (fine - whole).norm();
    // Rounding of the node coordinates perturbs each sample by about
    // eps |z| |g'/g|; the imbalance between the halves stands in for |g'/g|.
    let len = (b - a).norm();
    let reach = a.norm().max(b.norm());
    let floor = 64.0
        * f64::EPSILON
        * (left.norm() + right.norm() + 2.0 * reach * (left - right).norm() / len);
    if err <= tol.max(floor) || depth_left == 0 || *budget == 0 {
        return Ok((
            SegmentIntegral {
                value: fine,
                error: err,
            },
            floor,
        ));
    }
    *budget -= 1;
    let (l, nl) = refine(g, a, m, left, 0.5 * tol, depth_left - 1, budget)?;
    let (r, nr) = refine(g, m, b, right, 0.5 * tol, depth_left - 1, budget)?;
    Ok((
        SegmentIntegral {
            value: l.value + r.value,
            error: l.error + r.error,
        },
        nl + nr,
    ))
}

/// Pairwise (tree) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().copied().fold(Complex64::new(0.0, 0.0), |s, x| s + x);
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}
