//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use lcr_fista::{CompositeProblem, Metric, SmoothFunction};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Minimizes a scalar function on `[lo, hi]` by scanning a uniform grid.
pub fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| lo + i as f64 * step)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap()
}

/// Minimum-norm least-squares solution via the SVD pseudoinverse.
pub fn pinv_solve(a: &DMatrix<f64>, b: &[f64]) -> DVector<f64> {
    let pinv = a.clone().pseudo_inverse(1e-12).unwrap();
    pinv * DVector::from_column_slice(b)
}

/// Smallest eigenvalue of a symmetric matrix by minimizing the Rayleigh
/// quotient with shifted power iteration.
pub fn rayleigh_min(m: &DMatrix<f64>, iterations: usize) -> f64 {
    let n = m.nrows();
    let shift = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let shifted = DMatrix::identity(n, n) * shift - m;
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    v.normalize_mut();
    for _ in 0..iterations {
        v = &shifted * &v;
        v.normalize_mut();
    }
    v.dot(&(m * &v))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn sq_norm(metric: &Metric, v: &[f64]) -> f64 {
    let n = metric.norm(v);
    n * n
}

/// `R^{-1/2} H R^{-1/2}`.
pub fn scaled_hessian(h: &DMatrix<f64>, metric: &Metric) -> DMatrix<f64> {
    let d = metric.diag();
    DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] / (d[i] * d[j]).sqrt())
}

pub fn objective_gap<S: SmoothFunction>(p: &CompositeProblem<S>, x: &[f64], f_star: f64) -> f64 {
    p.objective(x) - f_star
}

/// Two-stage grid scan: a coarse pass at `1e-2`, then a `1e-5` pass around the
/// coarse winner. Valid for the convex scalar models used here.
pub fn grid_argmin_refined(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let coarse = grid_argmin(&f, lo, hi, 1e-2);
    grid_argmin(&f, (coarse - 2e-2).max(lo), (coarse + 2e-2).min(hi), 1e-5)
}
