#![allow(dead_code)]

use hypermetric::{c64, Complex64, H0Generator, MeromorphicSum, Term};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_in_disc(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    let rho = r * rng.gen::<f64>().sqrt();
    Complex64::from_polar(rho, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// `n` poles in `|z| < radius`, pairwise at least `min_gap * radius` apart,
/// residues in `[0.2, 2]`.
pub fn random_positive_instance(rng: &mut ChaCha8Rng, n: usize, radius: f64, min_gap: f64) -> MeromorphicSum {
    let mut poles: Vec<Complex64> = Vec::with_capacity(n);
    while poles.len() < n {
        let p = uniform_in_disc(rng, 0.9 * radius);
        if poles.iter().all(|q| (p - q).norm() > min_gap * radius) {
            poles.push(p);
        }
    }
    let terms = poles
        .into_iter()
        .map(|p| Term::new(c64(rng.gen_range(0.2..2.0), 0.0), p))
        .collect();
    MeromorphicSum::new(terms).unwrap()
}

/// Coefficients (lowest degree first) of the numerator
/// `sum_j a_j prod_{k != j} (z - z_k)` of a finite sum.
pub fn numerator(h: &MeromorphicSum) -> Vec<Complex64> {
    let terms = h.terms();
    let n = terms.len();
    let mut out = vec![c64(0.0, 0.0); n];
    for (j, t) in terms.iter().enumerate() {
        let mut poly = vec![t.residue];
        for (k, s) in terms.iter().enumerate() {
            if k == j {
                continue;
            }
            let mut next = vec![c64(0.0, 0.0); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * s.pole;
            }
            poly = next;
        }
        for (i, c) in poly.into_iter().enumerate() {
            out[i] += c;
        }
    }
    out
}

/// Roots of a polynomial from the eigenvalues of its companion matrix.
pub fn companion_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    if deg == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = c64(1.0, 0.0);
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let mut roots: Vec<Complex64> = m.schur().eigenvalues().expect("triangular Schur form").iter().copied().collect();
    sort_points(&mut roots);
    roots
}

/// Newton polish on the polynomial itself; eigenvalue roots are accurate to
/// about `sqrt(eps)` only at clusters.
pub fn polish(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut z = z;
    for _ in 0..20 {
        let (mut p, mut dp) = (c64(0.0, 0.0), c64(0.0, 0.0));
        for c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        z -= step;
        if step.norm() < 1e-16 {
            break;
        }
    }
    z
}

pub fn oracle_zeros(h: &MeromorphicSum) -> Vec<Complex64> {
    let coeffs = numerator(h);
    let mut roots: Vec<Complex64> = companion_roots(&coeffs)
        .into_iter()
        .map(|z| polish(&coeffs, z))
        .collect();
    sort_points(&mut roots);
    roots
}

pub fn sort_points(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// `sum_{j = start}^{end} a_j / (z - z_j)` for the h0 family, summed from the
/// small end.
pub fn h0_direct(z: Complex64, start: usize, end: usize) -> Complex64 {
    (start..=end)
        .rev()
        .map(|j| H0Generator::residue(j) / (z - H0Generator::pole(j)))
        .fold(c64(0.0, 0.0), |s, t| s + t)
}

/// Smallest distance between a point of `a` and its nearest point in `b`,
/// maximised over `a`.
pub fn match_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Zeros from the eigenvalues of `diag(z_j) - u 1^T`, `u_j = a_j z_j / sum a`.
///
/// `h(z) = 0` iff `1 + sum u_j / (z - z_j) = 0` for `z != 0`, so the spectrum
/// is the zero set plus a spurious eigenvalue at the origin, which is dropped.
/// Far better conditioned than expanding the numerator when poles cluster.
pub fn secular_zeros(h: &MeromorphicSum) -> Vec<Complex64> {
    let terms = h.terms();
    let n = terms.len();
    let total: Complex64 = terms.iter().map(|t| t.residue).sum();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (i, t) in terms.iter().enumerate() {
        m[(i, i)] = t.pole;
        let u = t.residue * t.pole / total;
        for j in 0..n {
            m[(i, j)] -= u;
        }
    }
    let mut eig: Vec<Complex64> = m.schur().eigenvalues().expect("triangular Schur form").iter().copied().collect();
    let spurious = (0..n).min_by(|&a, &b| eig[a].norm().total_cmp(&eig[b].norm())).unwrap();
    eig.remove(spurious);
    sort_points(&mut eig);
    eig
}
