//! Circle-contour quadrature: contour integrals, argument-principle counts and
//! Laurent coefficients.
//!
//! All circle integrals use the trapezoid rule on equispaced nodes, which is
//! spectrally accurate for periodic analytic integrands. Halving the node set
//! (every other node) gives an error estimate at no extra cost.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meromorphic::MeromorphicSum;
use crate::quadrature::{adaptive_segment, pairwise_sum};
use crate::schwarzian::PrincipalPart;

pub const MIN_NODES: usize = 16;
/// Node-doubling cap for winding counts and Laurent extraction.
pub const MAX_NODES: usize = 1 << 16;
/// An argument-principle value is accepted only within this distance of an integer.
pub const WINDING_DEFECT_LIMIT: f64 = 0.25;

const PARALLEL_THRESHOLD: usize = 2048;

/// Circle with a trapezoid node count (a power of two, at least 16).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("circle radius {radius} must be positive")));
        }
        if nodes < MIN_NODES || !nodes.is_power_of_two() {
            return Err(Error::invalid(format!(
                "circle node count {nodes} must be a power of two >= {MIN_NODES}"
            )));
        }
        Ok(Circle {
            center,
            radius,
            nodes,
        })
    }

    /// Node `k` of `n` equispaced nodes, starting on the positive real direction.
    pub fn node(&self, k: usize, n: usize) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, 2.0 * PI * k as f64 / n as f64)
    }

    fn with_nodes(&self, nodes: usize) -> Circle {
        Circle { nodes, ..*self }
    }
}

/// Axis-aligned rectangle, used as a cell by the zero search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::invalid(format!("empty rectangle [{x0},{x1}]x[{y0},{y1}]")));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x0, self.y0),
            Complex64::new(self.x1, self.y0),
            Complex64::new(self.x1, self.y1),
            Complex64::new(self.x0, self.y1),
        ]
    }

    /// Distance from `z` to the boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let c = self.corners();
        (0..4)
            .map(|k| segment_distance(z, c[k], c[(k + 1) % 4]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance from `z` to the segment `[a, b]`.
pub fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * d.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// A quadrature value with its node-halving convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: Complex64,
    pub estimate: f64,
}

/// Argument-principle result: `count = Z - P` inside the contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingReport {
    /// `(1/2 pi i) * contour integral of h'/h`
    pub raw: Complex64,
    pub count: i64,
    pub defect: f64,
    /// Trapezoid nodes at acceptance (0 for adaptive rectangle contours).
    pub nodes: usize,
}

impl WindingReport {
    fn from_raw(raw: Complex64, nodes: usize) -> Self {
        let count = raw.re.round() as i64;
        WindingReport {
            raw,
            count,
            defect: (raw - Complex64::new(count as f64, 0.0)).norm(),
            nodes,
        }
    }

    pub fn accepted(&self) -> bool {
        self.defect < WINDING_DEFECT_LIMIT && self.raw.im.abs() < WINDING_DEFECT_LIMIT
    }
}

/// Weighted samples `g(z_k) * dz_k` on the circle's nodes.
fn circle_samples<F>(g: &F, c: &Circle) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let n = c.nodes;
    let step = 2.0 * PI / n as f64;
    let sample = |k: usize| {
        let z = c.node(k, n);
        let v = g(z);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { z });
        }
        Ok(v * Complex64::i() * (z - c.center) * step)
    };
    if n >= PARALLEL_THRESHOLD {
        (0..n).into_par_iter().map(sample).collect()
    } else {
        (0..n).map(sample).collect()
    }
}

fn trapezoid_with_estimate(samples: &[Complex64]) -> Quadrature {
    let full = pairwise_sum(samples);
    let even: Vec<Complex64> = samples.iter().step_by(2).map(|s| 2.0 * s).collect();
    let half = pairwise_sum(&even);
    Quadrature {
        value: full,
        estimate: (full - half).norm(),
    }
}

/// `contour integral of g(z) dz` over the positively oriented circle.
pub fn integrate_circle<F>(g: F, c: &Circle) -> Result<Quadrature>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let samples = circle_samples(&g, c)?;
    Ok(trapezoid_with_estimate(&samples))
}

/// Argument-principle count `Z - P` of a finite sum inside the circle.
///
/// Nodes are doubled from `c.nodes` until the estimate settles and the value is
/// within [`WINDING_DEFECT_LIMIT`] of an integer.
pub fn winding_count(h: &MeromorphicSum, c: &Circle) -> Result<WindingReport> {
    h.require_finite("winding_count")?;
    let guard = h.pole_guard();
    for p in h.poles() {
        let gap = ((p - c.center).norm() - c.radius).abs();
        if gap <= guard {
            return Err(Error::BoundaryDegeneracy(format!(
                "pole {p} lies {gap:e} from the circle about {} of radius {}",
                c.center, c.radius
            )));
        }
    }
    let log_derivative = |z: Complex64| match h.derivs_explicit(z) {
        Ok([v, d, _]) if v != Complex64::new(0.0, 0.0) => d / v,
        _ => Complex64::new(f64::NAN, f64::NAN),
    };
    let mut nodes = c.nodes;
    let mut last = None;
    while nodes <= MAX_NODES {
        let q = match integrate_circle(log_derivative, &c.with_nodes(nodes)) {
            Ok(q) => q,
            Err(Error::NonFinite { z }) => {
                return Err(Error::BoundaryDegeneracy(format!("h vanishes at contour node {z}")))
            }
            Err(e) => return Err(e),
        };
        let raw = q.value / (2.0 * PI * Complex64::i());
        let report = WindingReport::from_raw(raw, nodes);
        if q.estimate / (2.0 * PI) < 0.05 && report.accepted() {
            return Ok(report);
        }
        last = Some(report);
        nodes *= 2;
    }
    let last = last.expect("at least one pass");
    Err(Error::NonConvergence(format!(
        "winding count on circle about {} radius {} did not settle: raw {} after {} nodes",
        c.center, c.radius, last.raw, last.nodes
    )))
}

/// Argument-principle count over a rectangle boundary, integrating `h'/h`
/// side by side with adaptive Gauss–Legendre.
pub fn winding_count_rect(h: &MeromorphicSum, r: &Rect, tol: f64) -> Result<WindingReport> {
    h.require_finite("winding_count_rect")?;
    let log_derivative = |z: Complex64| match h.derivs_explicit(z) {
        Ok([v, d, _]) if v != Complex64::new(0.0, 0.0) => d / v,
        _ => Complex64::new(f64::NAN, f64::NAN),
    };
    let c = r.corners();
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..4 {
        let seg = adaptive_segment(&log_derivative, c[k], c[(k + 1) % 4], tol, 40)?;
        total += seg.value;
    }
    let report = WindingReport::from_raw(total / (2.0 * PI * Complex64::i()), 0);
    if !report.accepted() {
        return Err(Error::BoundaryDegeneracy(format!(
            "rectangle count {} is not near an integer",
            report.raw
        )));
    }
    Ok(report)
}

/// Coefficients of `(z - center)^k` for each `k` in `ks`, sharing the samples.
pub fn laurent_coeffs<F>(g: F, center: Complex64, radius: f64, ks: &[i32]) -> Result<Vec<Quadrature>>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let base = Circle::new(center, radius, 64)?;
    let mut nodes = base.nodes;
    loop {
        let c = base.with_nodes(nodes);
        // a_k = (1/n) sum g(z_m) r^{-k} e^{-i k theta_m}
        let values: Vec<Complex64> = {
            let eval = |m: usize| {
                let z = c.node(m, nodes);
                let v = g(z);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    Err(Error::NonFinite { z })
                } else {
                    Ok(v)
                }
            };
            if nodes >= PARALLEL_THRESHOLD {
                (0..nodes).into_par_iter().map(eval).collect::<Result<_>>()?
            } else {
                (0..nodes).map(eval).collect::<Result<_>>()?
            }
        };
        let out: Vec<Quadrature> = ks
            .iter()
            .map(|&k| {
                let weighted: Vec<Complex64> = values
                    .iter()
                    .enumerate()
                    .map(|(m, v)| {
                        let theta = 2.0 * PI * m as f64 / nodes as f64;
                        v * Complex64::from_polar(radius.powi(-k), -(k as f64) * theta)
                            / nodes as f64
                    })
                    .collect();
                trapezoid_with_estimate(&weighted)
            })
            .collect();
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        let settled = out
            .iter()
            .zip(ks)
            .all(|(q, &k)| q.estimate <= 1e-13 * scale * radius.powi(-k));
        if settled || nodes >= MAX_NODES {
            return Ok(out);
        }
        nodes *= 2;
    }
}

/// `(1/2 pi i) * contour integral of g(z) / (z - center)^{k+1} dz`.
pub fn laurent_coeff<F>(g: F, center: Complex64, radius: f64, k: i32) -> Result<Quadrature>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    Ok(laurent_coeffs(g, center, radius, &[k])?[0])
}

/// Coefficients of `(z - center)^-2` and `(z - center)^-1`.
pub fn principal_part<F>(g: F, center: Complex64, radius: f64) -> Result<PrincipalPart>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let q = laurent_coeffs(g, center, radius, &[-2, -1])?;
    Ok(PrincipalPart {
        center,
        c2: q[0].value,
        c1: q[1].value,
        extraction_radius: radius,
        estimate: q[0].estimate.max(q[1].estimate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::meromorphic::Term;

    #[test]
    fn circle_validation() {
        assert!(Circle::new(c64(0.0, 0.0), 1.0, 16).is_ok());
        assert!(Circle::new(c64(0.0, 0.0), 1.0, 8).is_err());
        assert!(Circle::new(c64(0.0, 0.0), 1.0, 48).is_err());
        assert!(Circle::new(c64(0.0, 0.0), 0.0, 64).is_err());
    }

    #[test]
    fn residue_of_reciprocal() {
        let c = Circle::new(c64(0.0, 0.0), 1.0, 64).unwrap();
        let q = integrate_circle(|z| 1.0 / z, &c).unwrap();
        assert!((q.value - c64(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn analytic_integrand_vanishes() {
        for (center, radius) in [(c64(0.0, 0.0), 1.0), (c64(0.3, -2.0), 0.7)] {
            let c = Circle::new(center, radius, 64).unwrap();
            let q = integrate_circle(|z| z * z, &c).unwrap();
            assert!(q.value.norm() < 1e-12);
        }
    }

    #[test]
    fn non_finite_samples_error() {
        let c = Circle::new(c64(0.0, 0.0), 1.0, 16).unwrap();
        let r = integrate_circle(|_| c64(f64::INFINITY, 0.0), &c);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn winding_of_single_pole() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 0.0)]).unwrap();
        let c = Circle::new(c64(0.0, 0.0), 1.0, 16).unwrap();
        let w = winding_count(&h, &c).unwrap();
        assert_eq!(w.count, -1);
        assert!(w.defect < 1e-10);
    }

    #[test]
    fn winding_rejects_pole_on_circle() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 1.0)]).unwrap();
        let c = Circle::new(c64(0.0, 0.0), 1.0, 16).unwrap();
        assert!(matches!(winding_count(&h, &c), Err(Error::BoundaryDegeneracy(_))));
    }

    #[test]
    fn rectangle_count_matches_circle() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 0.5), Term::real(1.0, -0.5)]).unwrap();
        let r = Rect::new(-0.3, 0.7, -0.2, 0.25).unwrap(); // pole 0.5 and zero 0
        assert_eq!(winding_count_rect(&h, &r, 1e-9).unwrap().count, 0);
        let r = Rect::new(-0.3, 0.2, -0.2, 0.25).unwrap(); // zero only
        assert_eq!(winding_count_rect(&h, &r, 1e-9).unwrap().count, 1);
        let r = Rect::new(0.3, 0.7, -0.2, 0.25).unwrap(); // pole only
        assert_eq!(winding_count_rect(&h, &r, 1e-9).unwrap().count, -1);
    }

    #[test]
    fn laurent_read_off() {
        let q = laurent_coeff(|z| 0.5 / (z * z), c64(0.0, 0.0), 0.5, -2).unwrap();
        assert!((q.value - c64(0.5, 0.0)).norm() < 1e-14);
        let g = |z: Complex64| 3.0 / (z * z) + 5.0 / z + 7.0;
        let q = laurent_coeff(g, c64(0.0, 0.0), 1.0, -1).unwrap();
        assert!((q.value - c64(5.0, 0.0)).norm() < 1e-14);
        let q = laurent_coeff(g, c64(0.0, 0.0), 1.0, 0).unwrap();
        assert!((q.value - c64(7.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn principal_part_of_known_expansion() {
        let g = |z: Complex64| 0.5 / (z * z) + 3.0 / z + z.exp();
        let pp = principal_part(g, c64(0.0, 0.0), 0.4).unwrap();
        assert!((pp.c2 - c64(0.5, 0.0)).norm() < 1e-13);
        assert!((pp.c1 - c64(3.0, 0.0)).norm() < 1e-13);
        assert!(pp.estimate < 1e-8);
    }

    #[test]
    fn laurent_is_radius_independent() {
        // analytic in 0 < |z| < 1
        let g = |z: Complex64| 1.5 / (z * z) - 2.0 / z + 1.0 / (1.0 - z);
        for k in [-2, -1, 0, 3] {
            let vals: Vec<Complex64> = [0.2, 0.5, 0.8]
                .iter()
                .map(|&r| laurent_coeff(g, c64(0.0, 0.0), r, k).unwrap().value)
                .collect();
            assert!((vals[0] - vals[1]).norm() < 1e-9 && (vals[1] - vals[2]).norm() < 1e-9);
        }
    }

    #[test]
    fn segment_distance_cases() {
        let a = c64(0.0, 0.0);
        let b = c64(1.0, 0.0);
        assert_eq!(segment_distance(c64(0.5, 2.0), a, b), 2.0);
        assert_eq!(segment_distance(c64(-3.0, 4.0), a, b), 5.0);
    }
}
