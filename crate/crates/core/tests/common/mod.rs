//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's numerics: coefficients come from the
//! closed-form falling-factorial sum, operators are built densely from the edge
//! list, and spectral quantities come straight from nalgebra.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `C_n(k, t) = Σ_j binom(n, j) (−t)^j (k)_{n−j}` with `(k)_m` the falling factorial.
pub fn explicit_sum(k: f64, t: f64, n: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=n {
        let mut falling = 1.0;
        for i in 0..(n - j) {
            falling *= k - i as f64;
        }
        total += binom * (-t).powi(j as i32) * falling;
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    total
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `1 + Σ_{n≤N} C_n (−λ)^n / n!` when `identity`, otherwise the sum alone.
pub fn oracle_response(k: f64, t: f64, truncation: usize, lambda: f64, identity: bool) -> f64 {
    let base = if identity { 1.0 } else { 0.0 };
    base + (0..=truncation)
        .map(|n| explicit_sum(k, t, n) * (-lambda).powi(n as i32) / factorial(n))
        .sum::<f64>()
}

/// `Σ_{n≥1} |C_n| / (n − 1)!`.
pub fn oracle_stability_constant(k: f64, t: f64, truncation: usize) -> f64 {
    (1..=truncation)
        .map(|n| explicit_sum(k, t, n).abs() / factorial(n - 1))
        .sum()
}

/// Dense `I − (D+I)^{-1/2}(A+I)(D+I)^{-1/2}` built from an edge list.
pub fn dense_laplacian(m: usize, edges: &[(usize, usize)]) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::identity(m, m);
    for &(u, v) in edges {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let deg: Vec<f64> = (0..m).map(|i| a.row(i).sum()).collect();
    DMatrix::from_fn(m, m, |i, j| {
        let adj = a[(i, j)] / (deg[i] * deg[j]).sqrt();
        if i == j {
            1.0 - adj
        } else {
            -adj
        }
    })
}

/// `U g(Λ) Uᵀ` for a symmetric `l`.
pub fn spectral_apply(l: &DMatrix<f64>, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(l.clone());
    let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(g));
    &eig.eigenvectors * diag * eig.eigenvectors.transpose()
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Erdős–Rényi edge list with density `p`; the result may contain isolated nodes.
pub fn random_edges(rng: &mut ChaCha8Rng, m: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..m {
        for v in (u + 1)..m {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Like [`random_edges`] but guaranteed to contain at least one edge.
pub fn random_nonempty_edges(rng: &mut ChaCha8Rng, m: usize, p: f64) -> Vec<(usize, usize)> {
    loop {
        let e = random_edges(rng, m, p);
        if !e.is_empty() {
            return e;
        }
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// `|a − b| / max(|a|, |b|)`, falling back to the absolute error when both are
/// below `floor`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < floor {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Path of the workspace root (two levels above this crate).
pub fn workspace_root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}
