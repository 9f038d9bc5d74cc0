//! Zero location by recursive subdivision with argument-principle counts,
//! followed by damped Newton refinement.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{Disc, MeromorphicSum};
use crate::contour::{winding_count, winding_count_rect, Circle, Rect};
use crate::error::{Error, Result};

/// A located zero of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroRecord {
    pub location: Complex64,
    /// From the argument-principle count of the final enclosing disc.
    pub multiplicity: u32,
    /// `|h(location)|`
    pub refinement_residual: f64,
}

/// Tuning for [`locate_zeros`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSearch {
    /// Newton stops once `|h| < tol` and the step is below `step_tol`.
    pub tol: f64,
    pub step_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// Cells smaller than this are not split again.
    pub min_cell: f64,
    pub max_jitter: usize,
    /// Absolute tolerance of each rectangle side integral; counts only need
    /// the total within a fraction of 2 pi.
    pub quad_tol: f64,
    /// Sup-norm tolerance when an infinite sum is truncated.
    pub tail_tol: f64,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        ZeroSearch {
            tol: 1e-12,
            step_tol: 1e-12,
            max_newton: 100,
            max_halvings: 20,
            min_cell: 1e-6,
            max_jitter: 8,
            quad_tol: 1e-4,
            tail_tol: 1e-10,
        }
    }
}

/// Relative radius below which zeros are not separated.
const CLUSTER_RADIUS: f64 = 1e-6;

struct Candidate {
    location: Complex64,
    cell: Rect,
}

/// All zeros of `h` in the open disc `region`, sorted by real then imaginary
/// part.
///
/// An infinite sum is first truncated; the truncation error must stay below
/// half the minimum of the truncated sum on the boundary, so both have the
/// same zeros inside by Rouché. Multiplicities sum to the boundary winding
/// count plus the number of poles inside.
pub fn locate_zeros(h: &MeromorphicSum, region: &Disc, s: &ZeroSearch) -> Result<Vec<ZeroRecord>> {
    let finite = certified_truncation(h, region, s.tail_tol)?;
    let h = &finite;
    let circle = Circle::new(region.center, region.radius, 256)?;
    let boundary = winding_count(h, &circle)?;
    let poles_inside = h.poles_in(region).len() as i64;
    let expected = boundary.count + poles_inside;
    if expected < 0 {
        return Err(Error::NonConvergence(format!(
            "negative zero count {expected} inside disc about {}",
            region.center
        )));
    }
    if expected == 0 {
        return Ok(Vec::new());
    }

    let (root, root_count) = root_cell(h, region, s)?;
    let candidates = subdivide(h, root, root_count, s)?;

    let mut records = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        let multiplicity = enclosing_count(h, &candidates, i)?;
        records.push(ZeroRecord {
            location: c.location,
            multiplicity,
            refinement_residual: h.eval_explicit(c.location)?.norm(),
        });
    }
    records.retain(|r| region.contains(r.location));
    records.sort_by(|a, b| {
        a.location
            .re
            .total_cmp(&b.location.re)
            .then(a.location.im.total_cmp(&b.location.im))
    });
    let total: i64 = records.iter().map(|r| r.multiplicity as i64).sum();
    if total != expected {
        return Err(Error::NonConvergence(format!(
            "located multiplicities sum to {total}, argument principle gives {expected}"
        )));
    }
    Ok(records)
}

/// Truncation of `h` whose error is below half of `min |truncation|` on the
/// boundary of `region`, so both have the same zeros in the region.
pub fn certified_truncation(h: &MeromorphicSum, region: &Disc, tail_tol: f64) -> Result<MeromorphicSum> {
    if h.is_finite() {
        return Ok(h.clone());
    }
    let mut tol = tail_tol;
    for _ in 0..4 {
        let t = h.truncate(region, tol)?;
        let min_boundary = (0..4096)
            .map(|k| {
                let z = region.center
                    + Complex64::from_polar(region.radius, 2.0 * std::f64::consts::PI * k as f64 / 4096.0);
                t.sum.eval_explicit(z).map(|v| v.norm()).unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min);
        if t.error_bound < 0.5 * min_boundary {
            return Ok(t.sum);
        }
        tol *= 1e-2;
    }
    Err(Error::BoundaryDegeneracy(format!(
        "tail of {:?} cannot be made smaller than |h| on the boundary of the disc about {}",
        h.tail(),
        region.center
    )))
}

fn poles_inside(h: &MeromorphicSum, r: &Rect) -> i64 {
    h.poles().filter(|p| r.contains(*p)).count() as i64
}

/// Zero count `Z` for a rectangle, or `None` when its boundary is too close
/// to a pole or zero to be trusted.
fn cell_count(h: &MeromorphicSum, r: &Rect, s: &ZeroSearch) -> Option<i64> {
    let clearance = h.pole_guard().max(1e-9 * r.diameter());
    if h.poles().any(|p| r.boundary_distance(p) <= clearance) {
        return None;
    }
    let w = winding_count_rect(h, r, s.quad_tol).ok()?;
    let z = w.count + poles_inside(h, r);
    (z >= 0).then_some(z)
}

/// Signed jitter multipliers 0, +1, -1, +2, -2, ...
fn jitter(attempt: usize) -> f64 {
    let k = attempt.div_ceil(2) as f64;
    if attempt % 2 == 1 {
        k
    } else {
        -k
    }
}

fn root_cell(h: &MeromorphicSum, region: &Disc, s: &ZeroSearch) -> Result<(Rect, i64)> {
    for attempt in 0..s.max_jitter {
        let half = region.radius * (1.0 + 1e-4 * attempt as f64);
        let c = region.center;
        let r = Rect::new(c.re - half, c.re + half, c.im - half, c.im + half)?;
        if let Some(n) = cell_count(h, &r, s) {
            return Ok((r, n));
        }
    }
    Err(Error::BoundaryDegeneracy(format!(
        "bounding square of the disc about {} stays degenerate after {} jitters",
        region.center, s.max_jitter
    )))
}

fn subdivide(h: &MeromorphicSum, cell: Rect, count: i64, s: &ZeroSearch) -> Result<Vec<Candidate>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let small = cell.diameter() < s.min_cell;
    if count == 1 || small {
        // Newton may converge to a neighbour's zero; only a root inside the
        // cell (up to rounding) is this cell's
        let grow = 1e-9 * cell.diameter();
        match newton(h, cell.center(), count as u32, s) {
            Ok((z, _))
                if z.re >= cell.x0 - grow
                    && z.re <= cell.x1 + grow
                    && z.im >= cell.y0 - grow
                    && z.im <= cell.y1 + grow =>
            {
                return Ok(vec![Candidate {
                    location: z,
                    cell,
                }]);
            }
            Ok(_) | Err(_) if !small => {}
            Ok((z, _)) => {
                return Err(Error::NonConvergence(format!(
                    "Newton left cell {cell:?} for {z}"
                )))
            }
            Err(e) => return Err(e),
        }
    }

    if count > 1 {
        if let Some(c) = cluster(h, cell, count, s)? {
            return Ok(vec![c]);
        }
    }

    let w = cell.x1 - cell.x0;
    let hgt = cell.y1 - cell.y0;
    for attempt in 0..s.max_jitter {
        let d = 1e-4 * jitter(attempt);
        let sx = cell.x0 + 0.5 * w * (1.0 + d);
        let sy = cell.y0 + 0.5 * hgt * (1.0 - d);
        let kids = [
            Rect::new(cell.x0, sx, cell.y0, sy)?,
            Rect::new(sx, cell.x1, cell.y0, sy)?,
            Rect::new(sx, cell.x1, sy, cell.y1)?,
            Rect::new(cell.x0, sx, sy, cell.y1)?,
        ];
        let counts: Vec<Option<i64>> = kids.par_iter().map(|k| cell_count(h, k, s)).collect();
        if counts.iter().any(Option::is_none) {
            continue;
        }
        let counts: Vec<i64> = counts.into_iter().flatten().collect();
        if counts.iter().sum::<i64>() != count {
            continue;
        }
        let found: Vec<Vec<Candidate>> = kids
            .par_iter()
            .zip(counts.par_iter())
            .map(|(k, &n)| subdivide(h, *k, n, s))
            .collect::<Result<_>>()?;
        return Ok(found.into_iter().flatten().collect());
    }
    // A multiple zero on every split line: refine it as a cluster and let
    // the enclosing-disc count settle the multiplicity.
    if count > 1 {
        let grow = 0.1 * cell.diameter();
        if let Ok((z, _)) = newton(h, cell.center(), count as u32, s) {
            if (z - cell.center()).norm() <= 0.5 * cell.diameter() + grow {
                return Ok(vec![Candidate {
                    location: z,
                    cell,
                }]);
            }
        }
    }
    Err(Error::BoundaryDegeneracy(format!(
        "cell {cell:?} could not be split cleanly after {} jitters",
        s.max_jitter
    )))
}

/// All `count` zeros of `cell` within `CLUSTER_RADIUS * diameter` of one
/// Newton limit. A multiple zero splits under rounding into simple zeros far
/// too close to separate by subdivision; they are reported together.
fn cluster(h: &MeromorphicSum, cell: Rect, count: i64, s: &ZeroSearch) -> Result<Option<Candidate>> {
    let Ok((z, _)) = newton(h, cell.center(), count as u32, s) else {
        return Ok(None);
    };
    let r = CLUSTER_RADIUS * cell.diameter();
    if !cell.contains(z) || h.nearest_pole(z).is_some_and(|(_, d)| d <= 2.0 * r) {
        return Ok(None);
    }
    let w = winding_count(h, &Circle::new(z, r, 64)?);
    Ok(matches!(w, Ok(w) if w.count == count).then_some(Candidate { location: z, cell }))
}

/// Damped Newton on `h` with the multiplicity-corrected step `m h / h'`.
fn newton(h: &MeromorphicSum, z0: Complex64, m: u32, s: &ZeroSearch) -> Result<(Complex64, f64)> {
    let mut z = z0;
    for _ in 0..s.max_newton {
        let [v, d, _] = h.derivs_explicit(z)?;
        let residual = v.norm();
        // below this |h| is rounding noise and no step can be trusted
        let floor = 16.0 * f64::EPSILON * h.magnitude_scale(z);
        if d == Complex64::new(0.0, 0.0) {
            if residual <= floor.max(s.tol) {
                return Ok((z, residual));
            }
            return Err(Error::NonConvergence(format!("h' vanishes at {z}")));
        }
        let step = m as f64 * v / d;
        let at_floor = residual <= floor;
        if (residual < s.tol || at_floor) && (step.norm() < s.step_tol || at_floor) {
            return Ok((z, residual));
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..=s.max_halvings {
            let cand = z - step * t;
            if let Ok(vc) = h.eval_explicit(cand) {
                if vc.norm() < residual {
                    z = cand;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            if residual < s.tol {
                return Ok((z, residual));
            }
            return Err(Error::NonConvergence(format!(
                "damped Newton stalled at {z} with |h| = {residual:e}"
            )));
        }
    }
    Err(Error::NonConvergence(format!(
        "Newton from {z0} did not converge in {} iterations",
        s.max_newton
    )))
}

/// Multiplicity of candidate `i` from the winding count of a disc about it
/// that excludes every other candidate and every pole.
fn enclosing_count(h: &MeromorphicSum, all: &[Candidate], i: usize) -> Result<u32> {
    let here = all[i].location;
    let mut radius = all[i].cell.diameter().max(1e-6);
    for (j, other) in all.iter().enumerate() {
        if j != i {
            radius = radius.min(0.5 * (other.location - here).norm());
        }
    }
    if let Some((_, d)) = h.nearest_pole(here) {
        radius = radius.min(0.5 * d);
    }
    let w = winding_count(h, &Circle::new(here, radius, 64)?)?;
    let poles = h.poles().filter(|p| (p - here).norm() < radius).count() as i64;
    let z = w.count + poles;
    u32::try_from(z)
        .ok()
        .filter(|&m| m >= 1)
        .ok_or_else(|| Error::NonConvergence(format!("enclosing disc about {here} counts {z} zeros")))
}
