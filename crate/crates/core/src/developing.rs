//! The developing map `f(z) = i*lambda + int_base^z omega`, `omega = -i h(w) dw`.
//!
//! `f` is multi-valued on the pole complement; a value is tied to the polyline
//! along which it was integrated. Going once around a pole `z_j` adds the real
//! translation `2 pi a_j` (for real residues), so `Im f` is single-valued.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{integrate_circle, segment_distance, Circle, MAX_NODES};
use crate::error::{Error, Result};
use crate::meromorphic::{Disc, MeromorphicSum};
use crate::quadrature::adaptive_segment;

/// Absolute tolerance of each segment integral.
pub const SEGMENT_TOL: f64 = 1e-12;
pub const SEGMENT_MAX_DEPTH: u32 = 40;
/// Base point used when the origin is a pole.
pub const SHIFTED_BASE: Complex64 = Complex64::new(-0.5, 0.0);
/// Detour radius as a fraction of the pole separation.
pub const DETOUR_FRACTION: f64 = 0.45;
/// Chords per half-turn when an arc detour is flattened to a polyline.
const ARC_CHORDS_PER_PI: f64 = 16.0;

/// Integration path; consecutive vertices are distinct.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    vertices: Vec<Complex64>,
}

impl Polyline {
    pub fn new(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::invalid("a polyline needs at least one vertex"));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("consecutive polyline vertices must differ"));
        }
        Ok(Polyline { vertices })
    }

    /// The empty path sitting at `z`.
    pub fn point(z: Complex64) -> Self {
        Polyline { vertices: vec![z] }
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().unwrap()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    /// Append a vertex (ignored when equal to the current end).
    pub fn push(&mut self, z: Complex64) {
        if self.end() != z {
            self.vertices.push(z);
        }
    }

    /// Closed polygon approximating a positively oriented circle.
    pub fn circle(center: Complex64, radius: f64, sides: usize) -> Self {
        let mut vertices: Vec<Complex64> = (0..sides)
            .map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / sides as f64))
            .collect();
        vertices.push(vertices[0]);
        Polyline { vertices }
    }
}

/// `int omega` along a path, with the summed per-segment error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathIntegral {
    pub value: Complex64,
    pub error: f64,
}

/// Value of the developing map together with the path that fixes its branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DevelopingSample {
    pub z: Complex64,
    pub lambda: f64,
    pub value: Complex64,
    pub path: Polyline,
    pub quadrature_error: f64,
}

/// Numerical estimate of the half-plane threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda0Estimate {
    /// Max over the grid of `-Im int_base^z omega`.
    pub value: f64,
    pub grid_resolution: f64,
    /// `resolution * sup |h|` over the sampled points; heuristic, not a proof.
    pub margin: f64,
    pub base_point: Complex64,
    pub samples: usize,
}

impl Lambda0Estimate {
    /// `value + margin + 1`, the `"auto"` choice of lambda.
    pub fn auto_lambda(&self) -> f64 {
        self.value + self.margin + 1.0
    }
}

/// Real translation picked up by `f` around a loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monodromy {
    pub translation: f64,
    /// The full loop integral; its imaginary part should vanish.
    pub raw: Complex64,
    pub estimate: f64,
}

/// The origin, or [`SHIFTED_BASE`] when the origin is (next to) a pole.
pub fn default_base_point(h: &MeromorphicSum) -> Complex64 {
    let origin = Complex64::new(0.0, 0.0);
    let rho = detour_radius(h);
    if h.poles().any(|p| p.norm() < rho) {
        SHIFTED_BASE
    } else {
        origin
    }
}

fn detour_radius(h: &MeromorphicSum) -> f64 {
    DETOUR_FRACTION * h.separation().min(1.0)
}

/// `int omega` along `path`.
pub fn path_integral(h: &MeromorphicSum, path: &Polyline) -> Result<PathIntegral> {
    h.require_finite("path_integral")?;
    let guard = h.pole_guard();
    let omega = |z: Complex64| match h.eval_explicit(z) {
        Ok(v) => Complex64::new(v.im, -v.re),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    };
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for (k, (a, b)) in path.segments().enumerate() {
        for p in h.poles() {
            let distance = segment_distance(p, a, b);
            if distance <= guard {
                return Err(Error::PathThroughPole {
                    segment: k,
                    pole: p,
                    distance,
                });
            }
        }
        let seg = adaptive_segment(&omega, a, b, SEGMENT_TOL, SEGMENT_MAX_DEPTH)?;
        value += seg.value;
        error += seg.error;
    }
    Ok(PathIntegral { value, error })
}

/// `f = i*lambda + int omega` along `path`.
pub fn eval_f(h: &MeromorphicSum, lambda: f64, path: &Polyline) -> Result<DevelopingSample> {
    let integral = path_integral(h, path)?;
    Ok(DevelopingSample {
        z: path.end(),
        lambda,
        value: Complex64::new(0.0, lambda) + integral.value,
        path: path.clone(),
        quadrature_error: integral.error,
    })
}

/// Straight path from `base` to `z`, with arcs of radius
/// `0.45 * separation` around every pole the segment would pass too close to.
///
/// An arc goes round the side the straight segment was already passing on,
/// so the path is homotopic to the segment whenever the segment itself
/// avoids the poles; a pole exactly on the segment is passed on the left.
pub fn canonical_path(h: &MeromorphicSum, base: Complex64, z: Complex64) -> Result<Polyline> {
    h.require_finite("canonical_path")?;
    let mut path = Polyline::point(base);
    let dir = z - base;
    let len = dir.norm();
    if len == 0.0 {
        return Ok(path);
    }
    let u = dir / len;
    let rho = detour_radius(h);

    // (projection along the segment, signed offset to the left, pole)
    let mut blocking: Vec<(f64, f64, Complex64)> = h
        .poles()
        .filter_map(|p| {
            let rel = (p - base) * u.conj();
            let (s, n) = (rel.re, rel.im);
            (n.abs() < rho && s > 0.0 && s < len).then_some((s, n, p))
        })
        .collect();
    blocking.sort_by(|a, b| a.0.total_cmp(&b.0));

    for (s, n, p) in blocking {
        let half_chord = (rho * rho - n * n).sqrt();
        let (s_in, s_out) = (s - half_chord, s + half_chord);
        let entry = if s_in > 0.0 {
            base + u * s_in
        } else {
            p + (base - p) / (base - p).norm() * rho
        };
        let exit = if s_out < len {
            base + u * s_out
        } else {
            p + (z - p) / (z - p).norm() * rho
        };
        path.push(entry);
        // go round on the side opposite to the pole's offset; left on a tie
        let side = if n > 0.0 { -Complex64::i() * u } else { Complex64::i() * u };
        for v in arc(p, rho, entry, exit, side) {
            path.push(v);
        }
    }
    path.push(z);
    Ok(path)
}

/// Vertices of the arc about `center` from `from` to `to` passing through
/// direction `side`, excluding `from`, including `to`.
fn arc(center: Complex64, rho: f64, from: Complex64, to: Complex64, side: Complex64) -> Vec<Complex64> {
    let a0 = (from - center).arg();
    let a1 = (to - center).arg();
    let aside = side.arg();
    let ccw = (a1 - a0).rem_euclid(2.0 * PI);
    let side_offset = (aside - a0).rem_euclid(2.0 * PI);
    let sweep = if side_offset <= ccw { ccw } else { ccw - 2.0 * PI };
    let chords = ((sweep.abs() / PI) * ARC_CHORDS_PER_PI).ceil().max(1.0) as usize;
    (1..=chords)
        .map(|k| {
            if k == chords {
                to
            } else {
                center + Complex64::from_polar(rho, a0 + sweep * k as f64 / chords as f64)
            }
        })
        .collect()
}

/// Loop integral of `omega` around a positively oriented circle.
pub fn loop_translation(h: &MeromorphicSum, center: Complex64, radius: f64) -> Result<Monodromy> {
    h.require_finite("loop_translation")?;
    let omega = |z: Complex64| match h.eval_explicit(z) {
        Ok(v) => Complex64::new(v.im, -v.re),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    };
    let mut nodes = 64;
    loop {
        let q = integrate_circle(omega, &Circle::new(center, radius, nodes)?)?;
        let scale = q.value.norm().max(1.0);
        if q.estimate <= 1e-13 * scale || nodes >= MAX_NODES {
            return Ok(Monodromy {
                translation: q.value.re,
                raw: q.value,
                estimate: q.estimate,
            });
        }
        nodes *= 2;
    }
}

/// Translation of `f` around pole `pole_index` (0-based into `h.terms()`),
/// on a circle of radius a quarter of the distance to the nearest other pole.
pub fn monodromy(h: &MeromorphicSum, pole_index: usize) -> Result<Monodromy> {
    h.require_finite("monodromy")?;
    let term = h
        .terms()
        .get(pole_index)
        .ok_or_else(|| Error::invalid(format!("no pole with index {pole_index}")))?;
    let separation = h
        .poles()
        .enumerate()
        .filter(|&(k, _)| k != pole_index)
        .map(|(_, p)| (p - term.pole).norm())
        .fold(f64::INFINITY, f64::min);
    let radius = 0.25 * separation.min(2.0);
    if !(radius > 4.0 * h.pole_guard()) {
        return Err(Error::SeparationTooSmall { separation, radius });
    }
    let m = loop_translation(h, term.pole, radius)?;
    if m.raw.im.abs() >= 1e-9 {
        return Err(Error::NonConvergence(format!(
            "translation around {} has imaginary part {:e}",
            term.pole, m.raw.im
        )));
    }
    Ok(m)
}

/// Max of `-Im int_base^z omega` over a square grid of spacing `resolution`
/// in `domain`. Grid points within `resolution` of a pole are skipped: near a
/// positive-residue pole `-Im int omega -> -inf`.
///
/// Each row starts from a canonical path and then marches point to point.
/// With real residues `Im int omega` does not depend on the path.
pub fn estimate_lambda0(h: &MeromorphicSum, domain: &Disc, resolution: f64) -> Result<Lambda0Estimate> {
    h.require_finite("estimate_lambda0")?;
    if !(resolution > 0.0) {
        return Err(Error::invalid(format!("resolution {resolution} must be positive")));
    }
    let base = default_base_point(h);
    let steps = (domain.radius / resolution).floor() as i64;
    let keep = |z: Complex64| {
        (z - domain.center).norm() <= domain.radius && h.poles().all(|p| (z - p).norm() > resolution)
    };
    let rows: Vec<Vec<(f64, f64)>> = (-steps..=steps)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            let mut prev: Option<(Complex64, f64)> = None;
            for i in -steps..=steps {
                let z = domain.center + Complex64::new(i as f64, j as f64) * resolution;
                if !keep(z) {
                    prev = None;
                    continue;
                }
                let im = match prev {
                    Some((zp, ip)) => ip + path_integral(h, &Polyline::new(vec![zp, z])?)?.value.im,
                    None => path_integral(h, &canonical_path(h, base, z)?)?.value.im,
                };
                out.push((-im, h.eval_explicit(z)?.norm()));
                prev = Some((z, im));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let values: Vec<(f64, f64)> = rows.into_iter().flatten().collect();
    if values.is_empty() {
        return Err(Error::invalid("lambda0 grid is empty"));
    }
    let value = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let sup_h = values.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(Lambda0Estimate {
        value,
        grid_resolution: resolution,
        margin: resolution * sup_h,
        base_point: base,
        samples: values.len(),
    })
}

/// A developing map with fixed `lambda` and base point, plus the known zeros
/// of `h` (used to pick stencil and mask sizes).
#[derive(Debug, Clone)]
pub struct DevelopingMap<'a> {
    h: &'a MeromorphicSum,
    lambda: f64,
    base: Complex64,
    zeros: Vec<Complex64>,
}

impl<'a> DevelopingMap<'a> {
    pub fn new(h: &'a MeromorphicSum, lambda: f64) -> Result<Self> {
        h.require_finite("DevelopingMap")?;
        Ok(DevelopingMap {
            h,
            lambda,
            base: default_base_point(h),
            zeros: Vec::new(),
        })
    }

    pub fn with_base(mut self, base: Complex64) -> Self {
        self.base = base;
        self
    }

    pub fn with_zeros(mut self, zeros: Vec<Complex64>) -> Self {
        self.zeros = zeros;
        self
    }

    pub fn h(&self) -> &MeromorphicSum {
        self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    /// Poles followed by zeros.
    pub fn singular_points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.h.poles().chain(self.zeros.iter().copied())
    }

    pub fn singular_distance(&self, z: Complex64) -> f64 {
        self.singular_points()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn path_to(&self, z: Complex64) -> Result<Polyline> {
        canonical_path(self.h, self.base, z)
    }

    pub fn sample(&self, z: Complex64) -> Result<DevelopingSample> {
        eval_f(self.h, self.lambda, &self.path_to(z)?)
    }

    /// `f(to)` continued from a known value `f(from)` along the straight segment.
    pub fn continue_to(&self, from: Complex64, f_from: Complex64, to: Complex64) -> Result<Complex64> {
        let path = Polyline::new(vec![from, to])?;
        Ok(f_from + path_integral(self.h, &path)?.value)
    }

    /// `int omega` over the segment `from -> to`.
    pub fn increment(&self, from: Complex64, to: Complex64) -> Result<Complex64> {
        if from == to {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(path_integral(self.h, &Polyline::new(vec![from, to])?)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::meromorphic::Term;

    fn two_pole() -> MeromorphicSum {
        MeromorphicSum::new(vec![Term::real(1.0, 0.5), Term::real(1.0, -0.5)]).unwrap()
    }

    #[test]
    fn polyline_validation() {
        assert!(Polyline::new(vec![]).is_err());
        assert!(Polyline::new(vec![c64(0.0, 0.0), c64(0.0, 0.0)]).is_err());
        assert_eq!(Polyline::point(c64(1.0, 0.0)).segments().count(), 0);
    }

    #[test]
    fn empty_path_gives_i_lambda() {
        let s = eval_f(&two_pole(), 3.0, &Polyline::point(c64(0.0, 0.0))).unwrap();
        assert_eq!(s.value, c64(0.0, 3.0));
    }

    #[test]
    fn upper_semicircle_of_reciprocal() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 0.0)]).unwrap();
        let n = 4096;
        let path = Polyline::new(
            (0..=n)
                .map(|k| Complex64::from_polar(1.0, PI * k as f64 / n as f64))
                .collect(),
        )
        .unwrap();
        let v = path_integral(&h, &path).unwrap().value;
        // polygon vertices lie on the circle, so the log is exact
        assert!((v - c64(PI, 0.0)).norm() < 1e-10, "{v}");
    }

    #[test]
    fn straight_segment_matches_logarithm() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 0.5)]).unwrap();
        let path = Polyline::new(vec![c64(0.0, 0.0), c64(0.3, 0.0)]).unwrap();
        let v = path_integral(&h, &path).unwrap().value;
        let want = -Complex64::i() * (c64(-0.2, 0.0).ln() - c64(-0.5, 0.0).ln());
        assert!((v - want).norm() < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn path_through_pole_is_rejected() {
        let path = Polyline::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
        assert!(matches!(
            path_integral(&two_pole(), &path),
            Err(Error::PathThroughPole { .. })
        ));
    }

    #[test]
    fn canonical_path_detours_keep_clear_of_poles() {
        let h = two_pole();
        let path = canonical_path(&h, c64(0.0, 0.0), c64(0.9, 0.0)).unwrap();
        let rho = detour_radius(&h);
        // z = 0.9 sits inside the detour circle, so the last leg may dip in
        let floor = (0.9 * rho).min(0.4);
        for (a, b) in path.segments() {
            assert!(segment_distance(c64(0.5, 0.0), a, b) >= floor - 1e-12);
        }
        // tie is broken to the left: the arc goes through the upper half-plane
        assert!(path.vertices().iter().any(|v| v.im > 0.4 * rho));
        assert!(path.vertices().iter().all(|v| v.im >= -1e-12));
    }

    #[test]
    fn canonical_path_into_detour_circle() {
        let h = two_pole();
        let z = c64(0.52, 0.01);
        let path = canonical_path(&h, c64(0.0, 0.0), z).unwrap();
        assert_eq!(path.end(), z);
        let got = path_integral(&h, &path).unwrap().value;
        // Im part is branch independent
        let want_im: f64 = -h.terms().iter().map(|t| (z - t.pole).norm().ln() - t.pole.norm().ln()).sum::<f64>();
        assert!((got.im - want_im).abs() < 1e-11);
    }

    #[test]
    fn monodromy_of_reciprocal() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 0.0)]).unwrap();
        let m = monodromy(&h, 0).unwrap();
        assert!((m.translation - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn empty_loop_has_no_translation() {
        let m = loop_translation(&two_pole(), c64(0.0, 0.8), 0.2).unwrap();
        assert!(m.raw.norm() < 1e-10);
    }

    #[test]
    fn base_point_shifts_off_a_pole() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 0.0)]).unwrap();
        assert_eq!(default_base_point(&h), SHIFTED_BASE);
        assert_eq!(default_base_point(&two_pole()), c64(0.0, 0.0));
    }

    #[test]
    fn lambda0_for_distant_pole_is_finite() {
        let h = MeromorphicSum::new(vec![Term::real(1.0, 2.0)]).unwrap();
        let est = estimate_lambda0(&h, &Disc::centered(0.5), 0.05).unwrap();
        assert!(est.value.is_finite() && est.margin.is_finite());
        // -Im int_0^z omega = ln|z - 2| - ln 2, largest at z = -1/2
        assert!((est.value - (2.5f64 / 2.0).ln()).abs() < 1e-9);
    }
}
