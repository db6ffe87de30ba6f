//! Dense symmetric helpers: eigendecomposition and spectral norms.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};

/// Above this dimension spectral norms fall back to power iteration.
pub const DENSE_NORM_LIMIT: usize = 2000;
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITERS: usize = 10_000;

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Eigenvalues (ascending) and matching column eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    assert_eq!(a.nrows(), a.ncols(), "symmetric_eigen needs a square matrix");
    let n = a.nrows();
    let eig = SymmetricEigen::new(to_nalgebra(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Spectral norm of a symmetric matrix: its largest absolute eigenvalue.
pub fn symmetric_spectral_norm(a: &Array2<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let eig = SymmetricEigen::new(to_nalgebra(a));
    eig.eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Operator norm of a symmetric linear map by power iteration on `M²`.
///
/// The start vector is deterministic so repeated calls agree bit for bit.
pub fn power_iteration_norm(dim: usize, apply: impl Fn(&Array1<f64>) -> Array1<f64>) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut v = Array1::from_iter((0..dim).map(|i| 1.0 + ((i * 7919) % 97) as f64 / 97.0));
    v /= v.dot(&v).sqrt();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = apply(&apply(&v));
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = w / norm;
        if (next - estimate).abs() <= POWER_TOL * next.max(1.0) {
            return next;
        }
        estimate = next;
    }
    estimate
}
