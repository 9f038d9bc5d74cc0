use super::{Disc, TailGenerator, Term};

/// Terms summed exactly before the analytic remainder takes over.
const EXACT_TERMS: usize = 4096;

/// The family `a_j = 1 / (2 j^3 (2j + 1))`, `z_j = 1 - 1/(2j - 1)`, `j >= 1`.
///
/// Poles are real, increasing, start at `z_1 = 0` and accumulate at 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct H0Generator;

impl H0Generator {
    pub fn residue(j: usize) -> f64 {
        let j = j as f64;
        1.0 / (2.0 * j * j * j * (2.0 * j + 1.0))
    }

    pub fn pole(j: usize) -> f64 {
        1.0 - 1.0 / (2.0 * j as f64 - 1.0)
    }

    pub fn term(j: usize) -> Term {
        Term::real(Self::residue(j), Self::pole(j))
    }
}

impl TailGenerator for H0Generator {
    fn name(&self) -> &str {
        "h0"
    }

    fn term_at(&self, index: usize) -> Term {
        Self::term(index)
    }

    // sum_{j=n+1}^{m} a_j / (|z_j| - R) exactly, then the remainder
    // sum_{j>m} a_j <= sum_{j>m} 1/(4 j^4) <= 1/(12 m^3) over the smallest
    // remaining gap |z_{m+1}| - R.
    fn tail_abs_bound(&self, start: usize, region: &Disc) -> Option<f64> {
        let reach = region.outer_modulus();
        if reach >= 1.0 || reach >= Self::pole(start + 1) {
            return None;
        }
        let m = start + EXACT_TERMS;
        let exact: f64 = (start + 1..=m)
            .map(|j| Self::residue(j) / (Self::pole(j) - reach))
            .sum();
        let mf = m as f64;
        let remainder = 1.0 / (12.0 * mf * mf * mf) / (Self::pole(m + 1) - reach);
        Some(exact + remainder)
    }

    fn pole_modulus_lower(&self, index: usize) -> f64 {
        Self::pole(index.max(1))
    }
}
