//! Partial-fraction sums `h(z) = sum_j a_j / (z - z_j)`, finite or with an
//! infinite tail whose contribution is bounded analytically.

mod h0;
mod zeros;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use h0::H0Generator;
pub use zeros::{certified_truncation, locate_zeros, ZeroRecord, ZeroSearch};

/// Default pole guard as a fraction of the minimum pole separation.
pub const POLE_GUARD_FACTOR: f64 = 1e-8;

/// Largest generator index the truncation search will reach.
const MAX_TAIL_INDEX: usize = 1 << 22;

/// One partial fraction `residue / (z - pole)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub residue: Complex64,
    pub pole: Complex64,
}

impl Term {
    pub fn new(residue: Complex64, pole: Complex64) -> Self {
        Term { residue, pole }
    }

    pub fn real(residue: f64, pole: f64) -> Self {
        Term::new(Complex64::new(residue, 0.0), Complex64::new(pole, 0.0))
    }
}

/// Closed disc `|z - center| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Complex64,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) || !center.re.is_finite() || !center.im.is_finite()
        {
            return Err(Error::invalid(format!("bad disc: center {center}, radius {radius}")));
        }
        Ok(Disc { center, radius })
    }

    /// Disc about the origin.
    pub fn centered(radius: f64) -> Self {
        Disc {
            center: Complex64::new(0.0, 0.0),
            radius,
        }
    }

    /// Degenerate disc holding a single point.
    pub fn point(z: Complex64) -> Self {
        Disc {
            center: z,
            radius: 0.0,
        }
    }

    /// Open-disc membership.
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Largest modulus attained on the disc.
    pub fn outer_modulus(&self) -> f64 {
        self.center.norm() + self.radius
    }
}

/// Source of the terms `j >= first_index` of an infinite sum, together with a
/// certified bound on every tail.
///
/// Indices are 1-based. `tail_abs_bound(n, region)` must dominate
/// `sum_{j>n} |a_j| / dist(z_j, region)`, which in turn dominates the sup of
/// the tail over the region; the derivative bounds rely on the absolute form.
pub trait TailGenerator: fmt::Debug + Send + Sync {
    /// Registry name, e.g. `"h0"`.
    fn name(&self) -> &str;

    fn term_at(&self, index: usize) -> Term;

    /// `None` when the region reaches the accumulation set of the poles
    /// `j > start`. Must be non-increasing in `start` and non-negative.
    fn tail_abs_bound(&self, start: usize, region: &Disc) -> Option<f64>;

    /// Lower bound on `|z_j|` over all `j >= index`.
    fn pole_modulus_lower(&self, index: usize) -> f64;
}

/// Generator-backed tail of a [`MeromorphicSum`].
#[derive(Clone)]
pub struct Tail {
    generator: Arc<dyn TailGenerator>,
    first_index: usize,
}

impl Tail {
    pub fn generator(&self) -> &dyn TailGenerator {
        self.generator.as_ref()
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }
}

impl fmt::Debug for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tail")
            .field("generator", &self.generator.name())
            .field("first_index", &self.first_index)
            .finish()
    }
}

/// How much of an infinite sum an evaluation keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    /// Only the explicit terms; the tail is bounded, not summed.
    Explicit,
    /// Pull terms from the generator until the omitted tail is below the
    /// given sup-norm tolerance at the evaluation point.
    Tolerance(f64),
}

/// Value together with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub bound: f64,
}

/// `h`, `h'` and `h''` at a point, with tail bounds for each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: Complex64,
    pub first: Complex64,
    pub second: Complex64,
    pub bounds: [f64; 3],
}

/// A finite sum certified to be within `error_bound` of the original in sup
/// norm over `region`.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub sum: MeromorphicSum,
    pub error_bound: f64,
    pub region: Disc,
}

/// `h(z) = sum_j a_j / (z - z_j)`.
#[derive(Debug, Clone)]
pub struct MeromorphicSum {
    terms: Vec<Term>,
    tail: Option<Tail>,
    separation: f64,
    pole_guard: f64,
}

impl MeromorphicSum {
    /// Finite sum. Poles must be pairwise distinct and residues nonzero.
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        validate_terms(&terms)?;
        let separation = min_separation(&terms);
        if separation == 0.0 {
            return Err(Error::invalid("poles must be pairwise distinct"));
        }
        Ok(MeromorphicSum {
            pole_guard: default_guard(separation),
            terms,
            tail: None,
            separation,
        })
    }

    /// Explicit head followed by generator terms `first_index, first_index + 1, ...`.
    pub fn with_tail(
        terms: Vec<Term>,
        generator: Arc<dyn TailGenerator>,
        first_index: usize,
    ) -> Result<Self> {
        if first_index == 0 {
            return Err(Error::invalid("generator indices are 1-based"));
        }
        let mut sum = MeromorphicSum::new(terms)?;
        sum.tail = Some(Tail {
            generator,
            first_index,
        });
        Ok(sum)
    }

    /// The built-in family with `a_j = 1/(2 j^3 (2j+1))`, `z_j = 1 - 1/(2j-1)`:
    /// terms `j < tail_start` explicit, the rest generated.
    pub fn h0(tail_start: usize) -> Result<Self> {
        let tail_start = tail_start.max(1);
        let head = (1..tail_start).map(H0Generator::term).collect();
        MeromorphicSum::with_tail(head, Arc::new(H0Generator), tail_start)
    }

    /// The first `n` terms of the `h0` family as a finite sum.
    pub fn h0_partial(n: usize) -> Result<Self> {
        MeromorphicSum::new((1..=n).map(H0Generator::term).collect())
    }

    /// Override the evaluation guard radius around poles.
    pub fn with_pole_guard(mut self, guard: f64) -> Self {
        self.pole_guard = guard;
        self
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn tail(&self) -> Option<&Tail> {
        self.tail.as_ref()
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// Minimum pairwise distance between explicit poles (`inf` for one pole).
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn pole_guard(&self) -> f64 {
        self.pole_guard
    }

    pub fn poles(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.terms.iter().map(|t| t.pole)
    }

    /// Explicit poles lying in the open disc.
    pub fn poles_in(&self, region: &Disc) -> Vec<Complex64> {
        self.poles().filter(|p| region.contains(*p)).collect()
    }

    /// Every residue multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| Term::new(t.residue * c, t.pole))
            .collect();
        let mut out = MeromorphicSum::new(terms)?;
        out.tail = self.tail.clone();
        out.pole_guard = self.pole_guard;
        Ok(out)
    }

    pub(crate) fn require_finite(&self, what: &str) -> Result<()> {
        if self.tail.is_some() {
            return Err(Error::invalid(format!(
                "{what} needs a finite sum; truncate the tail first"
            )));
        }
        Ok(())
    }

    /// Nearest explicit pole and its distance.
    pub fn nearest_pole(&self, z: Complex64) -> Option<(Complex64, f64)> {
        self.poles()
            .map(|p| (p, (z - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn check_guard(&self, z: Complex64) -> Result<()> {
        for t in &self.terms {
            if (z - t.pole).norm() <= self.pole_guard {
                return Err(Error::PoleProximity {
                    z,
                    pole: t.pole,
                    guard: self.pole_guard,
                });
            }
        }
        Ok(())
    }

    /// Sum of the explicit terms, ignoring any tail.
    pub fn eval_explicit(&self, z: Complex64) -> Result<Complex64> {
        self.check_guard(z)?;
        Ok(self
            .terms
            .iter()
            .fold(Complex64::new(0.0, 0.0), |s, t| s + t.residue / (z - t.pole)))
    }

    /// `h(w) - h(z)` of the explicit terms, summed as
    /// `sum a_j (z - w) / ((w - z_j)(z - z_j))` so that nearby points do not cancel.
    pub fn difference_explicit(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        self.check_guard(z)?;
        self.check_guard(w)?;
        let d = z - w;
        Ok(self
            .terms
            .iter()
            .fold(Complex64::new(0.0, 0.0), |s, t| s + t.residue * d / ((w - t.pole) * (z - t.pole))))
    }

    /// `(h, h', h'')` of the explicit terms.
    pub fn derivs_explicit(&self, z: Complex64) -> Result<[Complex64; 3]> {
        self.check_guard(z)?;
        let zero = Complex64::new(0.0, 0.0);
        let mut out = [zero; 3];
        for t in &self.terms {
            let w = 1.0 / (z - t.pole);
            let aw = t.residue * w;
            out[0] += aw;
            out[1] -= aw * w;
            out[2] += 2.0 * aw * w * w;
        }
        Ok(out)
    }

    /// Sum of `|a_j / (z - z_j)|`, the rounding scale of [`Self::eval_explicit`].
    pub(crate) fn magnitude_scale(&self, z: Complex64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.residue.norm() / (z - t.pole).norm())
            .sum()
    }

    /// `h(z)` under the given policy, with a bound on whatever was left out.
    pub fn eval(&self, z: Complex64, policy: TruncationPolicy) -> Result<Evaluation> {
        let d = self.eval_derivatives(z, 0, policy)?;
        Ok(Evaluation {
            value: d.value,
            bound: d.bounds[0],
        })
    }

    /// Derivatives up to `order` (0, 1 or 2); higher orders are left at zero.
    pub fn eval_derivatives(
        &self,
        z: Complex64,
        order: usize,
        policy: TruncationPolicy,
    ) -> Result<Derivatives> {
        if order > 2 {
            return Err(Error::invalid(format!("derivative order {order} > 2")));
        }
        let (sum, last) = match (&self.tail, policy) {
            (None, _) => (None, 0),
            (Some(tail), TruncationPolicy::Explicit) => (None, tail.first_index - 1),
            (Some(_), TruncationPolicy::Tolerance(tol)) => {
                let last = self.tail_cutoff(&Disc::point(z), tol)?;
                (Some(self.extended(last)?), last)
            }
        };
        let sum = sum.as_ref().unwrap_or(self);
        let [h, h1, h2] = sum.derivs_explicit(z)?;
        let mut bounds = [0.0; 3];
        if let Some(tail) = &self.tail {
            let g = tail.generator();
            let b = g
                .tail_abs_bound(last, &Disc::point(z))
                .ok_or_else(|| Error::TailUnboundable(format!("at {z} beyond index {last}")))?;
            let dist = g.pole_modulus_lower(last + 1) - z.norm();
            bounds = [b, b / dist, 2.0 * b / (dist * dist)];
        }
        let zero = Complex64::new(0.0, 0.0);
        Ok(Derivatives {
            value: h,
            first: if order >= 1 { h1 } else { zero },
            second: if order >= 2 { h2 } else { zero },
            bounds,
        })
    }

    /// Finite sum within `tol` of `self` in sup norm over `region`; every
    /// pole in the region is retained.
    pub fn truncate(&self, region: &Disc, tol: f64) -> Result<Truncation> {
        let Some(_) = &self.tail else {
            return Ok(Truncation {
                sum: self.clone(),
                error_bound: 0.0,
                region: *region,
            });
        };
        let last = self.tail_cutoff(region, tol)?;
        let bound = self.tail_bound(last, region).unwrap_or(f64::INFINITY);
        Ok(Truncation {
            sum: self.extended(last)?,
            error_bound: bound,
            region: *region,
        })
    }

    fn tail_bound(&self, last: usize, region: &Disc) -> Option<f64> {
        let tail = self.tail.as_ref()?;
        let g = tail.generator();
        if g.pole_modulus_lower(last + 1) <= region.outer_modulus() {
            return None;
        }
        g.tail_abs_bound(last, region)
    }

    /// Smallest generator index `m` whose tail `j > m` is certified below
    /// `tol` on `region` and keeps all of its poles outside.
    fn tail_cutoff(&self, region: &Disc, tol: f64) -> Result<usize> {
        let tail = self.tail.as_ref().expect("tail present");
        if !(tol > 0.0) {
            return Err(Error::invalid(format!("truncation tolerance {tol} must be positive")));
        }
        let ok = |m: usize| self.tail_bound(m, region).is_some_and(|b| b < tol);
        let lo = tail.first_index - 1;
        if ok(lo) {
            return Ok(lo);
        }
        let mut lo = lo;
        let mut hi = (2 * lo).max(lo + 16);
        while !ok(hi) {
            if hi >= MAX_TAIL_INDEX {
                return Err(Error::TailUnboundable(format!(
                    "{} tail on disc {} radius {} stays above {tol:e} up to index {hi}",
                    tail.generator.name(),
                    region.center,
                    region.radius
                )));
            }
            lo = hi;
            hi = (2 * hi).min(MAX_TAIL_INDEX);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Explicit terms plus generated terms up to index `last`, as a finite sum.
    fn extended(&self, last: usize) -> Result<MeromorphicSum> {
        let mut terms = self.terms.clone();
        if let Some(tail) = &self.tail {
            terms.extend((tail.first_index..=last).map(|j| tail.generator.term_at(j)));
        }
        MeromorphicSum::new(terms)
    }
}

fn validate_terms(terms: &[Term]) -> Result<()> {
    if terms.is_empty() {
        return Ok(());
    }
    for t in terms {
        let finite = [t.residue.re, t.residue.im, t.pole.re, t.pole.im]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid(format!("non-finite term {t:?}")));
        }
        if t.residue == Complex64::new(0.0, 0.0) {
            return Err(Error::invalid(format!("zero residue at pole {}", t.pole)));
        }
    }
    Ok(())
}

fn default_guard(separation: f64) -> f64 {
    let scale = if separation.is_finite() { separation } else { 1.0 };
    POLE_GUARD_FACTOR * scale
}

/// Closest pair distance by a sweep over poles sorted by real part.
pub(crate) fn min_separation(terms: &[Term]) -> f64 {
    let mut pts: Vec<Complex64> = terms.iter().map(|t| t.pole).collect();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[j].re - pts[i].re >= best {
                break;
            }
            best = best.min((pts[j] - pts[i]).norm());
        }
    }
    best
}
