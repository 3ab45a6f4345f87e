//! Small dense Hermitian helpers for Gram panels.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::exec::Execution;

/// Gram matrix `G[i][j] = k(i, j)`, evaluated entrywise in parallel.
pub fn gram<E: Send>(n: usize, exec: Execution, k: impl Fn(usize, usize) -> Result<Complex64, E> + Sync + Send) -> Result<DMatrix<Complex64>, E> {
    let entries = exec.map(n * n, |idx| k(idx / n, idx % n));
    let mut g = DMatrix::zeros(n, n);
    for (idx, v) in entries.into_iter().enumerate() {
        g[(idx / n, idx % n)] = v?;
    }
    Ok(g)
}

/// `max |G - G^*|`.
pub fn hermitian_defect(g: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            worst = worst.max((g[(i, j)] - g[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian part of `g`, ascending.
pub fn hermitian_eigenvalues(g: &DMatrix<Complex64>) -> Vec<f64> {
    let h = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn min_eigenvalue(g: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(g).first().copied().unwrap_or(0.0)
}

/// `lambda_max / lambda_min` of a positive semidefinite Gram matrix.
pub fn condition_number(g: &DMatrix<Complex64>) -> f64 {
    let ev = hermitian_eigenvalues(g);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn frobenius(g: &DMatrix<Complex64>) -> f64 {
    g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
