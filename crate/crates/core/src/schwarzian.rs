//! Schwarzian derivatives and singularity classification.
//!
//! With `f' = -i h` the Schwarzian `{f, z} = f'''/f' - (3/2) (f''/f')^2`
//! becomes `h''/h - (3/2) (h'/h)^2`. Near a singular point its principal part
//! is `c2 / (z - p)^2 + c1 / (z - p)`, and `c2 = (1 - theta^2) / 2` where
//! `2 pi theta` is the cone angle; `theta = 0` is a cusp.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::contour::{principal_part, winding_count, Circle};
use crate::error::{Error, Result};
use crate::meromorphic::{certified_truncation, locate_zeros, Disc, MeromorphicSum, ZeroSearch};

/// Default classification tolerance on `c2`.
pub const CLASS_TOL: f64 = 1e-6;

/// Coefficients of `(z - center)^-2` and `(z - center)^-1` of a Laurent expansion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PrincipalPart {
    pub center: Complex64,
    pub c2: Complex64,
    pub c1: Complex64,
    pub extraction_radius: f64,
    /// Node-halving convergence estimate of the extraction.
    pub estimate: f64,
}

impl PrincipalPart {
    /// Accepted parts have a quadrature estimate below `1e-8`.
    pub fn accepted(&self) -> bool {
        self.estimate < 1e-8
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularityKind {
    Cusp,
    Cone { theta: f64 },
    Regular,
}

impl SingularityKind {
    pub fn label(&self) -> &'static str {
        match self {
            SingularityKind::Cusp => "cusp",
            SingularityKind::Cone { .. } => "cone",
            SingularityKind::Regular => "regular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularitySource {
    PoleOfH { residue: Complex64 },
    ZeroOfH { multiplicity: u32 },
    Probe,
}

impl SingularitySource {
    pub fn label(&self) -> &'static str {
        match self {
            SingularitySource::PoleOfH { .. } => "pole",
            SingularitySource::ZeroOfH { .. } => "zero",
            SingularitySource::Probe => "probe",
        }
    }

    /// `c2` predicted from the structure of `h`: 1/2 at poles,
    /// `(1 - (l+1)^2) / 2` at a zero of multiplicity `l`.
    pub fn predicted_c2(&self) -> Option<f64> {
        match *self {
            SingularitySource::PoleOfH { .. } => Some(0.5),
            SingularitySource::ZeroOfH { multiplicity } => {
                let theta = multiplicity as f64 + 1.0;
                Some(0.5 * (1.0 - theta * theta))
            }
            SingularitySource::Probe => None,
        }
    }
}

/// Classified singular point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityReport {
    pub location: Complex64,
    pub kind: SingularityKind,
    pub source: SingularitySource,
    pub theta: f64,
    pub indicial: (f64, f64),
    pub c2: Complex64,
    pub c1: Complex64,
    /// Set when the measured `c2` disagrees with the structural prediction.
    pub flag: bool,
}

impl SingularityReport {
    /// Cone angle `2 pi theta`.
    pub fn angle(&self) -> f64 {
        2.0 * PI * self.theta
    }
}

// {"location","kind","theta","angle","c2","indicial","source","flag"}
impl Serialize for SingularityReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SingularityReport", 8)?;
        st.serialize_field("location", &[self.location.re, self.location.im])?;
        st.serialize_field("kind", self.kind.label())?;
        st.serialize_field("theta", &self.theta)?;
        st.serialize_field("angle", &self.angle())?;
        st.serialize_field("c2", &[self.c2.re, self.c2.im])?;
        st.serialize_field("indicial", &[self.indicial.0, self.indicial.1])?;
        st.serialize_field("source", self.source.label())?;
        st.serialize_field("flag", &self.flag)?;
        st.end()
    }
}

/// `h''/h - (3/2)(h'/h)^2` for a finite sum, i.e. the Schwarzian of any
/// developing map with `f' = -i h`.
pub fn schwarzian_from_h(h: &MeromorphicSum, z: Complex64) -> Result<Complex64> {
    h.require_finite("schwarzian_from_h")?;
    let [v, d, dd] = h.derivs_explicit(z)?;
    let scale = h.magnitude_scale(z);
    if v.norm() <= 1e-12 * scale {
        return Err(Error::ZeroProximity { z, modulus: v.norm() });
    }
    let r = d / v;
    Ok(dd / v - 1.5 * r * r)
}

/// Schwarzian of a black-box analytic `f` from Richardson-extrapolated
/// central differences along the real direction (steps `step`, `step/2`,
/// `step/4`).
pub fn numeric_schwarzian<F>(f: F, z: Complex64, step: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("step {step} must be positive")));
    }
    let f0 = f(z);
    let mut table = [[Complex64::new(0.0, 0.0); 3]; 3];
    let mut peak = f0.norm();
    for (level, row) in table.iter_mut().enumerate() {
        let s = step / (1 << level) as f64;
        let p1 = f(z + s);
        let m1 = f(z - s);
        let p2 = f(z + 2.0 * s);
        let m2 = f(z - 2.0 * s);
        for v in [p1, m1, p2, m2] {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { z });
            }
            peak = peak.max(v.norm());
        }
        row[0] = (p1 - m1) / (2.0 * s);
        row[1] = (p1 - 2.0 * f0 + m1) / (s * s);
        row[2] = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * s * s * s);
    }
    let d = [0, 1, 2].map(|order| richardson([table[0][order], table[1][order], table[2][order]]));
    let [d1, d2, d3] = d;
    if d1.norm() * step <= 1e-12 * peak {
        return Err(Error::DegenerateDerivative {
            z,
            modulus: d1.norm(),
        });
    }
    let r = d2 / d1;
    Ok(d3 / d1 - 1.5 * r * r)
}

/// Two rounds of Richardson elimination for an even-order error expansion in
/// the step, with the step halved between entries.
fn richardson(col: [Complex64; 3]) -> Complex64 {
    let a = col[1] + (col[1] - col[0]) / 3.0;
    let b = col[2] + (col[2] - col[1]) / 3.0;
    b + (b - a) / 15.0
}

/// Roots `(1 + l)/2`, `(1 - l)/2` of the indicial equation, `l = sqrt(1 - 2 c2)`
/// on the principal branch. The second is computed as `1 - first`.
pub fn indicial_exponents(c2: Complex64) -> (Complex64, Complex64) {
    let l = (Complex64::new(1.0, 0.0) - 2.0 * c2).sqrt();
    let first = (1.0 + l) * 0.5;
    (first, Complex64::new(1.0, 0.0) - first)
}

/// Classify a principal part. The report's source is [`SingularitySource::Probe`].
pub fn classify_point(pp: &PrincipalPart, class_tol: f64) -> Result<SingularityReport> {
    let c2 = pp.c2;
    if c2.im.abs() >= class_tol || c2.re > 0.5 + class_tol {
        return Err(Error::NonHyperbolicExponent { c2 });
    }
    let (kind, theta) = if (c2 - 0.5).norm() < class_tol {
        (SingularityKind::Cusp, 0.0)
    } else if c2.norm() < class_tol && pp.c1.norm() < class_tol {
        (SingularityKind::Regular, 1.0)
    } else {
        let theta = (1.0 - 2.0 * c2.re).max(0.0).sqrt();
        (SingularityKind::Cone { theta }, theta)
    };
    let first = 0.5 * (1.0 + theta);
    Ok(SingularityReport {
        location: pp.center,
        kind,
        source: SingularitySource::Probe,
        theta,
        indicial: (first, 1.0 - first),
        c2,
        c1: pp.c1,
        flag: false,
    })
}

/// Settings for [`classify_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifySettings {
    pub class_tol: f64,
    pub zeros: ZeroSearch,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings {
            class_tol: CLASS_TOL,
            zeros: ZeroSearch::default(),
        }
    }
}

/// One report per pole of `h` in `region` and per located zero, each measured
/// by contour extraction of the Schwarzian and checked against the structural
/// prediction (flagged on mismatch beyond `class_tol`).
pub fn classify_all(
    h: &MeromorphicSum,
    region: &Disc,
    settings: &ClassifySettings,
) -> Result<Vec<SingularityReport>> {
    let finite = certified_truncation(h, region, settings.zeros.tail_tol)?;
    let zeros = locate_zeros(&finite, region, &settings.zeros)?;

    let mut points: Vec<(Complex64, SingularitySource)> = finite
        .terms()
        .iter()
        .filter(|t| region.contains(t.pole))
        .map(|t| (t.pole, SingularitySource::PoleOfH { residue: t.residue }))
        .collect();
    points.extend(zeros.iter().map(|z| {
        (
            z.location,
            SingularitySource::ZeroOfH {
                multiplicity: z.multiplicity,
            },
        )
    }));

    let mut singular: Vec<Complex64> = finite.poles().collect();
    singular.extend(zeros.iter().map(|z| z.location));

    points
        .par_iter()
        .map(|&(p, source)| {
            classify_singular_point(&finite, h.is_finite(), region, p, source, &singular, settings)
        })
        .collect()
}

fn classify_singular_point(
    h: &MeromorphicSum,
    exact: bool,
    region: &Disc,
    p: Complex64,
    source: SingularitySource,
    singular: &[Complex64],
    settings: &ClassifySettings,
) -> Result<SingularityReport> {
    let mut radius = singular
        .iter()
        .filter(|&&q| q != p)
        .map(|&q| 0.5 * (q - p).norm())
        .fold(1.0, f64::min);
    if !exact {
        // a truncated sum is only trusted inside the certified region
        radius = radius.min(0.5 * (region.radius - (p - region.center).norm()));
    }
    let expected_count = match source {
        SingularitySource::PoleOfH { .. } => -1,
        SingularitySource::ZeroOfH { multiplicity } => multiplicity as i64,
        SingularitySource::Probe => 0,
    };
    // shrink until the extraction circle encloses nothing but p
    for _ in 0..8 {
        let w = winding_count(h, &Circle::new(p, radius, 64)?)?;
        if w.count == expected_count {
            break;
        }
        radius *= 0.5;
    }
    let g = |z: Complex64| schwarzian_from_h(h, z).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let pp = principal_part(g, p, radius)?;
    if !pp.accepted() {
        return Err(Error::NonConvergence(format!(
            "principal part at {p} has estimate {:e}",
            pp.estimate
        )));
    }
    let mut report = classify_point(&pp, settings.class_tol)?;
    report.source = source;
    if let Some(expected) = source.predicted_c2() {
        let structural = match source {
            SingularitySource::PoleOfH { .. } => matches!(report.kind, SingularityKind::Cusp),
            _ => matches!(report.kind, SingularityKind::Cone { .. }),
        };
        report.flag = (report.c2 - expected).norm() >= settings.class_tol || !structural;
    }
    Ok(report)
}
