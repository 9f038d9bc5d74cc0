//! Instance configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//! lambda = "auto"          # or a number
//! spacing = 0.01
//!
//! [source]
//! terms = [[1.0, 0.0, 0.5, 0.0], [1.0, 0.0, -0.5, 0.0]]   # [a_re, a_im, z_re, z_im]
//! # generator = "h0"
//! # tail_start = 1
//!
//! [window]
//! x_min = -1.0
//! x_max = 1.0
//! y_min = -1.0
//! y_max = 1.0
//!
//! [region]                 # optional; defaults to the disc inscribed in the window
//! center = [0.0, 0.0]
//! radius = 0.9
//!
//! [tolerances]
//! curvature = 1e-4
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use hypermetric::{c64, Disc, MeromorphicSum, Term, Window};
use serde::Deserialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Generators accepted by `source.generator`.
pub const GENERATORS: &[&str] = &["h0"];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    source: RawSource,
    #[serde(default)]
    lambda: Option<toml::Value>,
    window: Window,
    region: Option<RawRegion>,
    spacing: f64,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    terms: Option<Vec<[f64; 4]>>,
    generator: Option<String>,
    tail_start: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    center: [f64; 2],
    radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Terms(Vec<Term>),
    Generator { name: String, tail_start: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Value(f64),
    Auto,
}

/// Named numeric settings; every field can be overridden by `--tol NAME=VAL`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|c2 - predicted|` above which a singular point is flagged.
    pub class: f64,
    /// Sup-norm error allowed when an infinite sum is truncated.
    pub tail: f64,
    /// Side-integral tolerance of the zero search.
    pub zero_quad: f64,
    /// Grid spacing of the lambda_0 estimate.
    pub lambda0_resolution: f64,
    pub curvature: f64,
    pub monodromy: f64,
    /// Relative tolerance on measured cone angles.
    pub cone_angle: f64,
    /// Upper bound on the measured angle parameter at a cusp.
    pub cusp_angle: f64,
    /// Number of random points in the curvature check.
    pub curvature_points: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            class: hypermetric::schwarzian::CLASS_TOL,
            tail: 1e-10,
            zero_quad: 1e-4,
            lambda0_resolution: 0.02,
            curvature: 1e-4,
            monodromy: 1e-8,
            cone_angle: 0.05,
            cusp_angle: 0.3,
            curvature_points: 200.0,
        }
    }
}

impl Tolerances {
    pub const NAMES: &'static [&'static str] = &[
        "class",
        "tail",
        "zero_quad",
        "lambda0_resolution",
        "curvature",
        "monodromy",
        "cone_angle",
        "cusp_angle",
        "curvature_points",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(CliError::Config(format!("tolerance {name} = {value} must be positive")));
        }
        let slot = match name {
            "class" => &mut self.class,
            "tail" => &mut self.tail,
            "zero_quad" => &mut self.zero_quad,
            "lambda0_resolution" => &mut self.lambda0_resolution,
            "curvature" => &mut self.curvature,
            "monodromy" => &mut self.monodromy,
            "cone_angle" => &mut self.cone_angle,
            "cusp_angle" => &mut self.cusp_angle,
            "curvature_points" => &mut self.curvature_points,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown tolerance {name:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConfig {
    pub source: Source,
    pub lambda: LambdaSpec,
    pub window: Window,
    /// Set when the config names a region explicitly.
    pub region: Option<Disc>,
    pub spacing: f64,
    pub tolerances: Tolerances,
}

impl InstanceConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match raw.schema_version {
            Some(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "unsupported schema_version {v}; this build reads {SCHEMA_VERSION}"
                )))
            }
            None => return Err(CliError::Config("schema_version is required".into())),
        }

        let source = match (raw.source.terms, raw.source.generator) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("source takes either terms or generator, not both".into()))
            }
            (None, None) => return Err(CliError::Config("source needs terms or generator".into())),
            (Some(terms), None) => {
                if raw.source.tail_start.is_some() {
                    return Err(CliError::Config("tail_start only applies to a generator".into()));
                }
                if terms.is_empty() {
                    return Err(CliError::Config("source.terms is empty".into()));
                }
                Source::Terms(
                    terms
                        .iter()
                        .map(|t| Term::new(c64(t[0], t[1]), c64(t[2], t[3])))
                        .collect(),
                )
            }
            (None, Some(name)) => {
                if !GENERATORS.contains(&name.as_str()) {
                    return Err(CliError::Config(format!(
                        "unknown generator {name:?}; known: {}",
                        GENERATORS.join(", ")
                    )));
                }
                let tail_start = raw.source.tail_start.unwrap_or(1);
                if tail_start == 0 {
                    return Err(CliError::Config("tail_start is 1-based".into()));
                }
                Source::Generator { name, tail_start }
            }
        };

        let lambda = match raw.lambda {
            None => LambdaSpec::Auto,
            Some(toml::Value::String(s)) if s == "auto" => LambdaSpec::Auto,
            Some(toml::Value::Float(x)) if x.is_finite() => LambdaSpec::Value(x),
            Some(toml::Value::Integer(n)) => LambdaSpec::Value(n as f64),
            Some(other) => {
                return Err(CliError::Config(format!("lambda must be a number or \"auto\", got {other}")))
            }
        };

        raw.window.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(raw.spacing > 0.0) || !raw.spacing.is_finite() {
            return Err(CliError::Config(format!("spacing {} must be positive", raw.spacing)));
        }
        let region = raw
            .region
            .map(|r| Disc::new(c64(r.center[0], r.center[1]), r.radius))
            .transpose()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let mut tolerances = Tolerances::default();
        for (name, value) in &raw.tolerances {
            tolerances.set(name, *value)?;
        }

        Ok(InstanceConfig {
            source,
            lambda,
            window: raw.window,
            region,
            spacing: raw.spacing,
            tolerances,
        })
    }

    /// Apply a `NAME=VAL` override.
    pub fn override_tolerance(&mut self, spec: &str) -> Result<(), CliError> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--tol expects NAME=VAL, got {spec:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("--tol {name}: {value:?} is not a number")))?;
        self.tolerances.set(name.trim(), value)
    }

    /// The disc the analysis runs on.
    pub fn region(&self) -> Disc {
        self.region.unwrap_or_else(|| self.window.inscribed_disc())
    }

    /// The sum as configured, possibly with a generated tail.
    pub fn sum(&self) -> Result<MeromorphicSum, CliError> {
        match &self.source {
            Source::Terms(terms) => MeromorphicSum::new(terms.clone()).map_err(|e| CliError::Config(e.to_string())),
            Source::Generator { tail_start, .. } => Ok(MeromorphicSum::h0(*tail_start)?),
        }
    }
}
