//! Small numerical helpers shared by the other modules.

use crate::{LabError, Matrix, Result, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Deterministic generator used for every seeded construction in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_iterator(rows, cols, (0..rows * cols).map(|_| StandardNormal.sample(rng)))
}

/// Haar-like random orthogonal matrix from the QR factorisation of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Solve `a x = b`, preferring Cholesky and falling back to LU.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    // Cholesky reads one triangle only, so it is reserved for symmetric systems.
    let asym = (a - a.transpose()).amax();
    if asym <= 1e-14 * a.amax() {
        if let Some(ch) = a.clone().cholesky() {
            return Ok(ch.solve(b));
        }
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| LabError::NotInvertible("singular linear system".into()))
}

pub fn symmetric_eigenvalues(a: &Matrix) -> Vector {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn is_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Numerically stable `ln Σ exp(v_i)`.
pub fn log_sum_exp(v: &Vector) -> f64 {
    let m = v.max();
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(v: &Vector) -> Vector {
    let m = v.max();
    let e = v.map(|x| (x - m).exp());
    let s = e.sum();
    e / s
}

/// Least-squares slope and r² of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Some((slope, intercept, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut r = rng(3);
        let q = random_orthogonal(&mut r, 6);
        let e = &q.transpose() * &q - Matrix::identity(6, 6);
        assert!(e.amax() < 1e-12);
    }

    #[test]
    fn lse_matches_naive() {
        let v = Vector::from_vec(vec![0.1, -2.0, 1.5]);
        let naive = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - naive).abs() < 1e-14);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|a| 3.0 - 2.0 * a).collect();
        let (s, c, r2) = linear_fit(&x, &y).unwrap();
        assert!((s + 2.0).abs() < 1e-12 && (c - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
