use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use hypermetric::developing::{estimate_lambda0, monodromy, DevelopingMap};
use hypermetric::meromorphic::{certified_truncation, locate_zeros};
use hypermetric::metric::{curvature_check, measure_cone_angle, sample_grid};
use hypermetric::rouche::rouche_table;
use hypermetric::schwarzian::{classify_all, ClassifySettings};
use hypermetric::{
    Complex64, CurvatureReport, Disc, Lambda0Estimate, MeromorphicSum, MetricGrid, RoucheReport,
    SingularityKind, SingularityReport, SingularitySource, ZeroRecord, ZeroSearch,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{InstanceConfig, LambdaSpec, SCHEMA_VERSION};
use crate::error::CliError;
use crate::output::write_atomic;

/// A configured instance with its finite working sum.
pub struct Instance {
    pub config: InstanceConfig,
    pub region: Disc,
    /// The configured sum; may carry a generated tail.
    pub sum: MeromorphicSum,
    /// `sum` itself, or its certified truncation on `region`.
    pub finite: MeromorphicSum,
}

impl Instance {
    pub fn new(config: InstanceConfig) -> Result<Self, CliError> {
        let region = config.region();
        let sum = config.sum()?;
        let finite = certified_truncation(&sum, &region, config.tolerances.tail)?;
        Ok(Instance { config, region, sum, finite })
    }

    fn zero_search(&self) -> ZeroSearch {
        ZeroSearch {
            quad_tol: self.config.tolerances.zero_quad,
            tail_tol: self.config.tolerances.tail,
            ..ZeroSearch::default()
        }
    }

    pub fn zeros(&self) -> Result<Vec<ZeroRecord>, CliError> {
        Ok(locate_zeros(&self.finite, &self.region, &self.zero_search())?)
    }

    pub fn lambda0(&self) -> Result<Lambda0Estimate, CliError> {
        Ok(estimate_lambda0(
            &self.finite,
            &self.region,
            self.config.tolerances.lambda0_resolution,
        )?)
    }

    /// The configured lambda, or `lambda0 + margin + 1` for `"auto"`.
    pub fn lambda(&self) -> Result<(f64, Option<Lambda0Estimate>), CliError> {
        match self.config.lambda {
            LambdaSpec::Value(x) => Ok((x, None)),
            LambdaSpec::Auto => {
                let est = self.lambda0()?;
                Ok((est.auto_lambda(), Some(est)))
            }
        }
    }

    fn classify_settings(&self) -> ClassifySettings {
        ClassifySettings {
            class_tol: self.config.tolerances.class,
            zeros: self.zero_search(),
        }
    }

    fn truncation_note(&self) -> Option<String> {
        (!self.sum.is_finite()).then(|| {
            format!(
                "infinite sum truncated to {} terms on the region",
                self.finite.terms().len()
            )
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Lambda0Summary {
    pub value: f64,
    pub margin: f64,
    pub resolution: f64,
    pub samples: usize,
    pub base_point: [f64; 2],
    pub auto_lambda: f64,
}

impl From<&Lambda0Estimate> for Lambda0Summary {
    fn from(e: &Lambda0Estimate) -> Self {
        Lambda0Summary {
            value: e.value,
            margin: e.margin,
            resolution: e.grid_resolution,
            samples: e.samples,
            base_point: pair(e.base_point),
            auto_lambda: e.auto_lambda(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionSummary {
    pub center: [f64; 2],
    pub radius: f64,
}

impl From<&Disc> for RegionSummary {
    fn from(d: &Disc) -> Self {
        RegionSummary { center: pair(d.center), radius: d.radius }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeEntry {
    pub location: [f64; 2],
    pub theta: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Divisor {
    pub cusps: usize,
    pub cones: Vec<ConeEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub schema_version: u32,
    pub region: RegionSummary,
    pub lambda0: Lambda0Summary,
    pub singularities: Vec<SingularityReport>,
    pub divisor: Divisor,
    pub flags: Vec<String>,
}

pub fn classify(inst: &Instance) -> Result<ClassifyReport, CliError> {
    let reports = classify_all(&inst.finite, &inst.region, &inst.classify_settings())?;
    let lambda0 = inst.lambda0()?;
    let mut flags: Vec<String> = inst.truncation_note().into_iter().collect();
    for r in reports.iter().filter(|r| r.flag) {
        flags.push(format!(
            "{} at ({}, {}): c2 = {} does not match the prediction {}",
            r.source.label(),
            r.location.re,
            r.location.im,
            r.c2.re,
            r.source.predicted_c2().unwrap_or(f64::NAN)
        ));
    }
    let divisor = Divisor {
        cusps: reports.iter().filter(|r| r.kind == SingularityKind::Cusp).count(),
        cones: reports
            .iter()
            .filter(|r| matches!(r.kind, SingularityKind::Cone { .. }))
            .map(|r| ConeEntry { location: pair(r.location), theta: r.theta, angle: r.angle() })
            .collect(),
    };
    Ok(ClassifyReport {
        schema_version: SCHEMA_VERSION,
        region: (&inst.region).into(),
        lambda0: (&lambda0).into(),
        singularities: reports,
        divisor,
        flags,
    })
}

pub fn rouche(n_max: usize) -> Result<Vec<RoucheReport>, CliError> {
    if n_max < 2 {
        return Err(CliError::Config(format!("--n-max {n_max} must be at least 2")));
    }
    Ok(rouche_table(n_max)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ZerosReport {
    pub schema_version: u32,
    pub region: RegionSummary,
    pub poles_inside: usize,
    pub count: u32,
    pub zeros: Vec<ZeroRecord>,
}

pub fn zeros(inst: &Instance) -> Result<ZerosReport, CliError> {
    let zeros = inst.zeros()?;
    Ok(ZerosReport {
        schema_version: SCHEMA_VERSION,
        region: (&inst.region).into(),
        poles_inside: inst.finite.poles_in(&inst.region).len(),
        count: zeros.iter().map(|z| z.multiplicity).sum(),
        zeros,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Lambda0Report {
    pub schema_version: u32,
    pub region: RegionSummary,
    pub lambda0: Lambda0Summary,
}

pub fn lambda0(inst: &Instance) -> Result<Lambda0Report, CliError> {
    Ok(Lambda0Report {
        schema_version: SCHEMA_VERSION,
        region: (&inst.region).into(),
        lambda0: (&inst.lambda0()?).into(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured deviation (or, for angle bounds, worst measured value).
    pub value: f64,
    pub tolerance: f64,
    pub tested: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonodromyEntry {
    pub pole: [f64; 2],
    pub residue: [f64; 2],
    pub translation: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AngleEntry {
    pub location: [f64; 2],
    pub source: &'static str,
    pub expected_theta: f64,
    pub measured_theta: f64,
    pub radii: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub region: RegionSummary,
    pub lambda: f64,
    pub lambda0: Option<Lambda0Summary>,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub curvature: CurvatureReport,
    pub monodromy: Vec<MonodromyEntry>,
    pub angles: Vec<AngleEntry>,
    pub flags: Vec<String>,
    pub passed: bool,
}

/// Mask radius used for sampling: the grid mask at the configured spacing.
fn mask_radius(inst: &Instance) -> f64 {
    (hypermetric::metric::MASK_SPACINGS * inst.config.spacing).max(inst.finite.pole_guard())
}

fn random_points(inst: &Instance, map: &DevelopingMap<'_>, seed: u64, n: usize) -> Result<Vec<Complex64>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep_out = mask_radius(inst);
    let d = inst.region;
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * n.max(1) {
            return Err(CliError::Config(
                "region has too little room outside the masks for the curvature check".into(),
            ));
        }
        let z = d.center + Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * d.radius;
        if (z - d.center).norm() < d.radius && map.singular_distance(z) > keep_out {
            out.push(z);
        }
    }
    Ok(out)
}

/// Radii for a circumference ratio around `p`: at most `cap`, and well inside
/// the distance to every other singular point.
fn angle_radii(map: &DevelopingMap<'_>, region: &Disc, p: Complex64, cap: f64) -> (f64, f64) {
    let gap = map
        .singular_points()
        .filter(|&q| q != p)
        .map(|q| (q - p).norm())
        .fold(region.radius - (p - region.center).norm(), f64::min);
    let r = cap.min(0.2 * gap);
    (r, 0.5 * r)
}

pub fn verify(inst: &Instance, seed: u64) -> Result<VerifyReport, CliError> {
    let tol = inst.config.tolerances;
    let (lambda, est) = inst.lambda()?;
    let zeros = inst.zeros()?;
    let map = DevelopingMap::new(&inst.finite, lambda)?
        .with_zeros(zeros.iter().map(|z| z.location).collect());
    let mut checks = Vec::new();
    let mut flags: Vec<String> = inst.truncation_note().into_iter().collect();

    let points = random_points(inst, &map, seed, tol.curvature_points as usize)?;
    let curvature = curvature_check(&map, &points, None)?;
    checks.push(Check {
        name: "curvature",
        passed: curvature.max_abs_deviation < tol.curvature,
        value: curvature.max_abs_deviation,
        tolerance: tol.curvature,
        tested: curvature.nodes_tested,
    });

    let mut monodromies = Vec::new();
    let mut worst = 0.0f64;
    for (j, t) in inst.finite.terms().iter().enumerate() {
        if !inst.region.contains(t.pole) {
            continue;
        }
        let m = monodromy(&inst.finite, j)?;
        let expected = TAU * t.residue.re;
        worst = worst.max((m.translation - expected).abs());
        monodromies.push(MonodromyEntry {
            pole: pair(t.pole),
            residue: pair(t.residue),
            translation: m.translation,
            expected,
        });
    }
    checks.push(Check {
        name: "monodromy",
        passed: worst < tol.monodromy,
        value: worst,
        tolerance: tol.monodromy,
        tested: monodromies.len(),
    });

    let reports = classify_all(&inst.finite, &inst.region, &inst.classify_settings())?;
    let schwarzian_dev = reports
        .iter()
        .filter_map(|r| r.source.predicted_c2().map(|c| (r.c2 - c).norm()))
        .fold(0.0, f64::max);
    for r in reports.iter().filter(|r| r.flag) {
        flags.push(format!("{} at ({}, {}) flagged: c2 = {}", r.source.label(), r.location.re, r.location.im, r.c2.re));
    }
    checks.push(Check {
        name: "schwarzian",
        passed: reports.iter().all(|r| !r.flag),
        value: schwarzian_dev,
        tolerance: tol.class,
        tested: reports.len(),
    });

    let mut angles = Vec::new();
    let (mut cone_worst, mut cone_n) = (0.0f64, 0);
    let (mut cusp_worst, mut cusp_n) = (0.0f64, 0);
    for r in &reports {
        match r.source {
            SingularitySource::ZeroOfH { multiplicity } => {
                let expected = multiplicity as f64 + 1.0;
                let radii = angle_radii(&map, &inst.region, r.location, 0.02);
                let e = measure_cone_angle(&map, r.location, radii)?;
                cone_worst = cone_worst.max((e.theta - expected).abs() / expected);
                cone_n += 1;
                angles.push(angle_entry(r, expected, e.theta, radii));
            }
            SingularitySource::PoleOfH { .. } => {
                let radii = angle_radii(&map, &inst.region, r.location, 1e-3);
                let e = measure_cone_angle(&map, r.location, radii)?;
                cusp_worst = cusp_worst.max(e.theta);
                cusp_n += 1;
                angles.push(angle_entry(r, 0.0, e.theta, radii));
            }
            SingularitySource::Probe => {}
        }
    }
    checks.push(Check {
        name: "cone_angle",
        passed: cone_worst <= tol.cone_angle,
        value: cone_worst,
        tolerance: tol.cone_angle,
        tested: cone_n,
    });
    checks.push(Check {
        name: "cusp_angle",
        passed: cusp_worst < tol.cusp_angle,
        value: cusp_worst,
        tolerance: tol.cusp_angle,
        tested: cusp_n,
    });

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        region: (&inst.region).into(),
        lambda,
        lambda0: est.as_ref().map(Into::into),
        seed,
        checks,
        curvature,
        monodromy: monodromies,
        angles,
        flags,
        passed,
    })
}

fn angle_entry(r: &SingularityReport, expected: f64, measured: f64, radii: (f64, f64)) -> AngleEntry {
    AngleEntry {
        location: pair(r.location),
        source: r.source.label(),
        expected_theta: expected,
        measured_theta: measured,
        radii: [radii.0, radii.1],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub schema_version: u32,
    pub lambda: f64,
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub masked_fraction: f64,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct PgmSidecar {
    image: &'static str,
    nx: usize,
    ny: usize,
    u_min: Option<f64>,
    u_max: Option<f64>,
    masked_value: u8,
    /// Unmasked nodes map affinely onto 1..=255, the top image row is `y_max`.
    mapping: &'static str,
}

pub const GRID_CSV: &str = "grid.csv";
pub const GRID_PGM: &str = "grid.pgm";
pub const GRID_PGM_META: &str = "grid.pgm.json";

pub fn compute_grid(inst: &Instance) -> Result<(f64, MetricGrid), CliError> {
    let (lambda, _) = inst.lambda()?;
    let zeros = inst.zeros()?;
    let map = DevelopingMap::new(&inst.finite, lambda)?
        .with_zeros(zeros.iter().map(|z| z.location).collect());
    // a truncated sum is only valid on its region; an explicit region also limits the grid
    let domain = (inst.config.region.is_some() || !inst.sum.is_finite()).then_some(&inst.region);
    let grid = sample_grid(&map, &inst.config.window, inst.config.spacing, domain)?;
    Ok((lambda, grid))
}

pub fn grid_csv(grid: &MetricGrid) -> String {
    let mut s = String::with_capacity(32 * grid.nx * grid.ny + 16);
    s.push_str("x,y,u,masked\n");
    for (z, u) in grid.nodes() {
        match u {
            Some(u) => writeln!(s, "{},{},{},0", z.re, z.im, u),
            None => writeln!(s, "{},{},,1", z.re, z.im),
        }
        .expect("writing to a String");
    }
    s
}

fn u_range(grid: &MetricGrid) -> Option<(f64, f64)> {
    grid.nodes()
        .filter_map(|(_, u)| u)
        .fold(None, |acc, u| match acc {
            None => Some((u, u)),
            Some((lo, hi)) => Some((lo.min(u), hi.max(u))),
        })
}

pub fn grid_pgm(grid: &MetricGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    let (lo, hi) = u_range(grid).unwrap_or((0.0, 0.0));
    let width = hi - lo;
    for j in (0..grid.ny).rev() {
        for i in 0..grid.nx {
            out.push(match grid.get(i, j) {
                None => 0,
                Some(_) if width == 0.0 => 128,
                Some(u) => 1 + (254.0 * (u - lo) / width).round() as u8,
            });
        }
    }
    out
}

pub fn grid(inst: &Instance, out_dir: &Path, pgm: bool) -> Result<GridSummary, CliError> {
    let (lambda, grid) = compute_grid(inst)?;
    let range = u_range(&grid);
    write_atomic(out_dir, GRID_CSV, grid_csv(&grid).as_bytes())?;
    let mut files = vec![GRID_CSV.to_string()];
    if pgm {
        write_atomic(out_dir, GRID_PGM, &grid_pgm(&grid))?;
        let meta = PgmSidecar {
            image: GRID_PGM,
            nx: grid.nx,
            ny: grid.ny,
            u_min: range.map(|r| r.0),
            u_max: range.map(|r| r.1),
            masked_value: 0,
            mapping: "byte = 1 + round(254 * (u - u_min) / (u_max - u_min))",
        };
        write_atomic(out_dir, GRID_PGM_META, crate::output::to_json(&meta).as_bytes())?;
        files.push(GRID_PGM.to_string());
        files.push(GRID_PGM_META.to_string());
    }
    Ok(GridSummary {
        schema_version: SCHEMA_VERSION,
        lambda,
        nx: grid.nx,
        ny: grid.ny,
        spacing: grid.spacing,
        masked_fraction: grid.masked_fraction(),
        u_min: range.map(|r| r.0),
        u_max: range.map(|r| r.1),
        files,
    })
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}
