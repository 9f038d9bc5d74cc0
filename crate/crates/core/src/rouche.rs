//! Rouché comparison for `h0 = f_N + g_N` on the circle `|z| = r_N`,
//! `r_N = 1 - 1/(2N)`, where `f_N` keeps the poles inside the circle
//! (exactly `j <= N`).
//!
//! On the circle `|g_N| <= sum_{j>N} a_j / (|z_j| - r_N) <= sum_{j>N} 1/j^2`,
//! and `a_1 = 1/6` is the lower bound the comparison is usually run against.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{winding_count, Circle};
use crate::error::{Error, Result};
use crate::meromorphic::{Disc, H0Generator, MeromorphicSum};

pub const ROUCHE_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoucheReport {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "r_N")]
    pub r_n: f64,
    /// Sampled minimum of `|f_N|` on the circle.
    #[serde(rename = "min_fN")]
    pub min_f_n: f64,
    /// `sum_{j>N} 1/j^2`.
    #[serde(rename = "max_gN_bound")]
    pub max_g_n_bound: f64,
    /// Sampled maximum of `|g_N|`, on the certified truncation of `h0`.
    #[serde(rename = "sampled_max_gN")]
    pub sampled_max_g_n: f64,
    /// `min_fN > max_gN_bound`.
    pub inequality_holds: bool,
    #[serde(rename = "zero_count_fN")]
    pub zero_count_f_n: i64,
    pub zero_count_h0: i64,
    pub a1: f64,
    /// `a_1 > max_gN_bound`, the comparison without sampling `f_N`.
    pub chain_holds: bool,
    pub truncation_terms: usize,
    pub truncation_error: f64,
}

/// `r_N = 1 - 1/(2N)`.
pub fn rouche_radius(n: usize) -> f64 {
    1.0 - 1.0 / (2.0 * n as f64)
}

/// `sum_{j>n} 1/j^2 = pi^2/6 - sum_{j<=n} 1/j^2`.
pub fn inverse_square_tail(n: usize) -> f64 {
    let head: f64 = (1..=n).rev().map(|j| 1.0 / (j * j) as f64).sum();
    PI * PI / 6.0 - head
}

pub fn rouche_report(n: usize) -> Result<RoucheReport> {
    if n < 1 {
        return Err(Error::invalid("rouche needs N >= 1"));
    }
    let r = rouche_radius(n);
    let f_n = MeromorphicSum::h0_partial(n)?;
    let nodes: Vec<Complex64> = (0..ROUCHE_SAMPLES)
        .map(|k| Complex64::from_polar(r, 2.0 * PI * k as f64 / ROUCHE_SAMPLES as f64))
        .collect();
    let f_vals: Vec<Complex64> = nodes
        .par_iter()
        .map(|&z| f_n.eval_explicit(z))
        .collect::<Result<_>>()?;
    let min_f_n = f_vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);

    let region = Disc::centered(r);
    let trunc = MeromorphicSum::h0(n + 1)?.truncate(&region, 1e-3 * min_f_n)?;
    let full = &trunc.sum;
    let g_terms = &full.terms()[n..];
    let sampled_max_g_n = nodes
        .par_iter()
        .map(|&z| {
            g_terms
                .iter()
                .fold(Complex64::new(0.0, 0.0), |s, t| s + t.residue / (z - t.pole))
                .norm()
        })
        .reduce(|| 0.0, f64::max);

    let circle = Circle::new(Complex64::new(0.0, 0.0), r, 256)?;
    let zero_count_f_n = winding_count(&f_n, &circle)?.count + n as i64;
    let poles_inside = full.poles().filter(|p| p.norm() < r).count() as i64;
    let zero_count_h0 = winding_count(full, &circle)?.count + poles_inside;

    let bound = inverse_square_tail(n);
    let a1 = H0Generator::residue(1);
    Ok(RoucheReport {
        n,
        r_n: r,
        min_f_n,
        max_g_n_bound: bound,
        sampled_max_g_n,
        inequality_holds: min_f_n > bound,
        zero_count_f_n,
        zero_count_h0,
        a1,
        chain_holds: a1 > bound,
        truncation_terms: full.terms().len(),
        truncation_error: trunc.error_bound,
    })
}

/// Reports for `N = 2..=n_max`.
pub fn rouche_table(n_max: usize) -> Result<Vec<RoucheReport>> {
    if n_max < 2 {
        return Err(Error::invalid(format!("n_max {n_max} must be at least 2")));
    }
    (2..=n_max).map(rouche_report).collect()
}
