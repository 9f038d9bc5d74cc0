//! The pulled-back metric `e^{2u}|dz|^2` with `u = ln|h| - ln Im f`.
//!
//! Under the translation monodromy `Im f` is single-valued, so `u` is too; the
//! path a value of `f` came from only matters for the real part.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::developing::{eval_f, DevelopingMap, Polyline};
use crate::error::{Error, Result};
use crate::meromorphic::{Disc, MeromorphicSum};

/// Mask radius in units of the grid spacing.
pub const MASK_SPACINGS: f64 = 5.0;
/// Default stencil as a fraction of the distance to the nearest singular point.
pub const STENCIL_FRACTION: f64 = 1e-3;
pub const STENCIL_FLOOR: f64 = 1e-6;
pub const CIRCUMFERENCE_NODES: usize = 512;
const CIRCUMFERENCE_MAX_NODES: usize = 1 << 14;

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let w = Window { x_min, x_max, y_min, y_max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::invalid(format!("empty or non-finite window {self:?}")));
        }
        Ok(())
    }

    /// Largest disc inside the window.
    pub fn inscribed_disc(&self) -> Disc {
        let r = 0.5 * (self.x_max - self.x_min).min(self.y_max - self.y_min);
        Disc {
            center: Complex64::new(
                0.5 * (self.x_min + self.x_max),
                0.5 * (self.y_min + self.y_max),
            ),
            radius: r,
        }
    }
}

/// Log-density on a row-major grid; `u` is NaN where `mask` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricGrid {
    pub origin: Complex64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub u: Vec<f64>,
    pub mask: Vec<bool>,
}

impl MetricGrid {
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        self.origin + Complex64::new(i as f64, j as f64) * self.spacing
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = j * self.nx + i;
        (!self.mask[k]).then_some(self.u[k])
    }

    pub fn masked_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }

    /// `(z, u)` for every node in row-major order, `None` where masked.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, Option<f64>)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (self.point(i, j), self.get(i, j))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureReport {
    /// `sup |K + 1|` over the tested points.
    pub max_abs_deviation: f64,
    pub nodes_tested: usize,
    /// Largest stencil used.
    pub stencil_spacing: f64,
    pub worst_point: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeAngleEstimate {
    pub theta: f64,
    pub radii: (f64, f64),
    pub circumferences: (f64, f64),
    /// Node-halving estimates of the two circumferences.
    pub estimates: (f64, f64),
}

fn h_nonzero(h: &MeromorphicSum, z: Complex64) -> Result<Complex64> {
    let v = h.eval_explicit(z)?;
    if v.norm() <= 1e-12 * h.magnitude_scale(z) {
        return Err(Error::ZeroProximity { z, modulus: v.norm() });
    }
    Ok(v)
}

fn density_from(h_z: Complex64, f_z: Complex64, z: Complex64) -> Result<f64> {
    if !(f_z.im > 0.0) {
        return Err(Error::HalfPlaneViolation { z, im_f: f_z.im });
    }
    Ok(h_z.norm().ln() - f_z.im.ln())
}

/// `u(z) = ln|h(z)| - ln Im f(z)` with `f` integrated along `path`.
pub fn density_u(h: &MeromorphicSum, lambda: f64, path: &Polyline) -> Result<f64> {
    let z = path.end();
    let hz = h_nonzero(h, z)?;
    let f = eval_f(h, lambda, path)?;
    density_from(hz, f.value, z)
}

/// Grid of `u` over `window`; nodes within `max(5 spacing, pole_guard)` of a
/// pole or known zero, or outside `domain`, are masked.
pub fn sample_grid(
    map: &DevelopingMap<'_>,
    window: &Window,
    spacing: f64,
    domain: Option<&Disc>,
) -> Result<MetricGrid> {
    window.validate()?;
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::invalid(format!("spacing {spacing} must be positive")));
    }
    let nx = ((window.x_max - window.x_min) / spacing + 1e-9).floor() as usize + 1;
    let ny = ((window.y_max - window.y_min) / spacing + 1e-9).floor() as usize + 1;
    if nx.saturating_mul(ny) > 1 << 26 {
        return Err(Error::invalid(format!("grid of {nx}x{ny} nodes is too large")));
    }
    let origin = Complex64::new(window.x_min, window.y_min);
    let mask_radius = (MASK_SPACINGS * spacing).max(map.h().pole_guard());
    let singular: Vec<Complex64> = map.singular_points().collect();
    let masked = |z: Complex64| {
        singular.iter().any(|&p| (z - p).norm() <= mask_radius)
            || domain.is_some_and(|d| (z - d.center).norm() > d.radius)
    };

    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let mut u = vec![f64::NAN; nx];
            let mut mask = vec![true; nx];
            // last unmasked node and f there
            let mut prev: Option<(Complex64, Complex64)> = None;
            for i in 0..nx {
                let z = origin + Complex64::new(i as f64, j as f64) * spacing;
                if masked(z) {
                    prev = None;
                    continue;
                }
                let f = match prev {
                    Some((zp, fp)) => fp + map.increment(zp, z)?,
                    None => map.sample(z)?.value,
                };
                let hz = h_nonzero(map.h(), z)?;
                u[i] = density_from(hz, f, z)?;
                mask[i] = false;
                prev = Some((z, f));
            }
            Ok((u, mask))
        })
        .collect::<Result<_>>()?;

    let mut grid = MetricGrid {
        origin,
        spacing,
        nx,
        ny,
        u: Vec::with_capacity(nx * ny),
        mask: Vec::with_capacity(nx * ny),
    };
    for (u, mask) in rows {
        grid.u.extend(u);
        grid.mask.extend(mask);
    }
    Ok(grid)
}

const DIRECTIONS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

/// `(4 L(s/2) - L(s)) / 3` for the 5-point Laplacian `L` built from
/// differences `du(offset) = u(p + offset) - u(p)`.
fn richardson_laplacian<D>(s: f64, du: D) -> Result<f64>
where
    D: Fn(Complex64) -> Result<f64>,
{
    let lap = |t: f64| -> Result<f64> {
        let mut acc = 0.0;
        for e in DIRECTIONS {
            acc += du(e * t)?;
        }
        Ok(acc / (t * t))
    };
    let coarse = lap(s)?;
    let fine = lap(0.5 * s)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `K = -e^{-2u} Delta u` at `p` for an arbitrary density.
pub fn curvature_from_density<U>(p: Complex64, stencil: f64, u: U) -> f64
where
    U: Fn(Complex64) -> f64,
{
    let u0 = u(p);
    let lap = richardson_laplacian(stencil, |d| Ok(u(p + d) - u0)).unwrap();
    -(-2.0 * u0).exp() * lap
}

/// Gaussian curvature of the pulled-back metric at one point.
///
/// Differences of `u` are formed from ratios, `ln|h_k/h_0| - ln(1 + dIm f/Im f_0)`,
/// which stays accurate when `u` itself is large.
pub fn curvature_at(map: &DevelopingMap<'_>, p: Complex64, stencil: f64) -> Result<f64> {
    let h = map.h();
    let h0 = h_nonzero(h, p)?;
    let f0 = map.sample(p)?.value;
    let u0 = density_from(h0, f0, p)?;
    let lap = richardson_laplacian(stencil, |d| {
        let z = p + d;
        h_nonzero(h, z)?;
        let x = h.difference_explicit(p, z)? / h0;
        let df = map.increment(p, z)?;
        let ratio = df.im / f0.im;
        if !(ratio > -1.0) {
            return Err(Error::HalfPlaneViolation { z, im_f: f0.im + df.im });
        }
        // ln|1 + x| and ln(1 + ratio), both small when the stencil is
        Ok(0.5 * (2.0 * x.re + x.norm_sqr()).ln_1p() - ratio.ln_1p())
    })?;
    Ok(-(-2.0 * u0).exp() * lap)
}

/// `sup |K + 1|` over `points`. With `stencil = None` each point uses
/// `max(1e-3 * distance to nearest singular point, 1e-6)`.
pub fn curvature_check(
    map: &DevelopingMap<'_>,
    points: &[Complex64],
    stencil: Option<f64>,
) -> Result<CurvatureReport> {
    if points.is_empty() {
        return Err(Error::invalid("curvature_check needs at least one point"));
    }
    let results: Vec<(Complex64, f64, f64)> = points
        .par_iter()
        .map(|&p| {
            let s = stencil
                .unwrap_or_else(|| (STENCIL_FRACTION * map.singular_distance(p)).max(STENCIL_FLOOR));
            let k = curvature_at(map, p, s)?;
            Ok((p, (k + 1.0).abs(), s))
        })
        .collect::<Result<_>>()?;
    let mut report = CurvatureReport {
        max_abs_deviation: 0.0,
        nodes_tested: results.len(),
        stencil_spacing: 0.0,
        worst_point: results[0].0,
    };
    for (p, dev, s) in results {
        if dev > report.max_abs_deviation || dev.is_nan() {
            report.max_abs_deviation = dev;
            report.worst_point = p;
        }
        report.stencil_spacing = report.stencil_spacing.max(s);
    }
    Ok(report)
}

/// Circumference of `|z - p| = r` in the metric, with a node-halving estimate.
pub fn circumference(map: &DevelopingMap<'_>, p: Complex64, r: f64) -> Result<(f64, f64)> {
    let h = map.h();
    let mut n = CIRCUMFERENCE_NODES;
    loop {
        let nodes: Vec<Complex64> = (0..n)
            .map(|k| p + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64))
            .collect();
        // e^u at every node; f is marched round the circle chord by chord
        let mut f = map.sample(nodes[0])?.value;
        let mut density = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                f += map.increment(nodes[k - 1], nodes[k])?;
            }
            let hz = h_nonzero(h, nodes[k])?;
            density.push(density_from(hz, f, nodes[k])?.exp());
        }
        let w = 2.0 * PI * r / n as f64;
        let full: f64 = density.iter().sum::<f64>() * w;
        let half: f64 = density.iter().step_by(2).sum::<f64>() * 2.0 * w;
        let estimate = (full - half).abs();
        if estimate <= 1e-10 * full || n >= CIRCUMFERENCE_MAX_NODES {
            return Ok((full, estimate));
        }
        n *= 2;
    }
}

/// `theta = ln(C(r1)/C(r2)) / ln(r1/r2)` from the circumferences of two
/// circles about `p`.
pub fn measure_cone_angle(
    map: &DevelopingMap<'_>,
    p: Complex64,
    radii: (f64, f64),
) -> Result<ConeAngleEstimate> {
    let (r1, r2) = radii;
    if !(r1 > 0.0 && r2 > 0.0) || r1 == r2 {
        return Err(Error::invalid(format!("radii {radii:?} must be distinct and positive")));
    }
    let (c1, e1) = circumference(map, p, r1)?;
    let (c2, e2) = circumference(map, p, r2)?;
    Ok(ConeAngleEstimate {
        theta: (c1 / c2).ln() / (r1 / r2).ln(),
        radii,
        circumferences: (c1, c2),
        estimates: (e1, e2),
    })
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
    fn window_validation() {
        assert!(Window::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Window::new(0.0, 1.0, 0.0, f64::NAN).is_err());
        let d = Window::new(-1.0, 1.0, -0.5, 0.5).unwrap().inscribed_disc();
        assert_eq!(d.radius, 0.5);
    }

    #[test]
    fn reciprocal_closed_form_density() {
        // base -1/2: Im f = lambda - ln|z| + ln(1/2)
        let h = MeromorphicSum::new(vec![Term::real(1.0, 0.0)]).unwrap();
        let z = c64(0.0, (-1.0f64).exp());
        let map = DevelopingMap::new(&h, 2f64.ln()).unwrap();
        let u = density_u(&h, map.lambda(), &map.path_to(z).unwrap()).unwrap();
        // u = 1 - ln(ln 2 + 1 - ln 2) = 1
        assert!((u - 1.0).abs() < 1e-12, "{u}");
    }

    #[test]
    fn half_plane_violation() {
        let h = two_pole();
        let map = DevelopingMap::new(&h, -5.0).unwrap();
        assert!(matches!(
            curvature_check(&map, &[c64(0.1, 0.2)], None),
            Err(Error::HalfPlaneViolation { .. })
        ));
    }

    #[test]
    fn curvature_two_pole() {
        let h = two_pole();
        let map = DevelopingMap::new(&h, 3.0).unwrap().with_zeros(vec![c64(0.0, 0.0)]);
        let pts = [c64(0.2, 0.3), c64(-0.7, -0.1), c64(0.45, 0.05)];
        let rep = curvature_check(&map, &pts, None).unwrap();
        assert!(rep.max_abs_deviation < 1e-6, "{rep:?}");
    }

    #[test]
    fn perturbed_density_fails() {
        let u = |z: Complex64| -z.norm().ln() - (3.0 - z.norm().ln()).ln();
        let p = c64(0.6, 0.1);
        let k = curvature_from_density(p, 1e-3, u);
        assert!((k + 1.0).abs() < 1e-6, "{k}");
        let k = curvature_from_density(p, 1e-3, |z| u(z) + 0.01 * (z * z).re);
        assert!((k + 1.0).abs() > 1e-3, "{k}");
    }

    #[test]
    fn grid_masks_and_symmetry() {
        let h = two_pole();
        let map = DevelopingMap::new(&h, 3.0).unwrap().with_zeros(vec![c64(0.0, 0.0)]);
        // nodes at odd multiples of 0.03 never sit on a mask circle
        let w = Window::new(-0.81, 0.81, -0.39, 0.39).unwrap();
        let g = sample_grid(&map, &w, 0.06, None).unwrap();
        assert_eq!((g.nx, g.ny), (28, 14));
        assert!(g.get(13, 6).is_none()); // next to the zero
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (a, b) = (g.get(i, j), g.get(g.nx - 1 - i, j));
                match (a, b) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
                    (None, None) => {}
                    _ => panic!("asymmetric mask"),
                }
            }
        }
    }

    #[test]
    fn regular_point_has_angle_one() {
        let h = two_pole();
        let map = DevelopingMap::new(&h, 3.0).unwrap();
        let est = measure_cone_angle(&map, c64(0.1, 0.4), (0.02, 0.01)).unwrap();
        assert!((est.theta - 1.0).abs() < 0.05, "{est:?}");
    }
}
