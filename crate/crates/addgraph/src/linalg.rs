//! Small-matrix factorization helpers backed by nalgebra.
//!
//! Basis matrices here are tall and thin (n rows, at most a handful of
//! columns), so pure-Rust QR/SVD is plenty.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};

pub(crate) fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn to_nd(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin QR with the sign convention diag(R) >= 0, so that an input with
/// orthonormal columns returns Q = M, R = I.
pub(crate) fn thin_qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows() {
        if r[(i, i)] < 0.0 {
            for j in 0..r.ncols() {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..q.nrows() {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    (q, r)
}

pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub(crate) fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Inverse of a small upper-triangular matrix by back substitution.
pub(crate) fn upper_triangular_inverse(r: &DMatrix<f64>) -> DMatrix<f64> {
    let k = r.nrows();
    let mut inv = DMatrix::zeros(k, k);
    for col in (0..k).rev() {
        let mut e = DMatrix::zeros(k, 1);
        e[(col, 0)] = 1.0;
        for i in (0..k).rev() {
            let mut s = e[(i, 0)];
            for j in (i + 1)..k {
                s -= r[(i, j)] * inv[(j, col)];
            }
            inv[(i, col)] = s / r[(i, i)];
        }
    }
    inv
}
