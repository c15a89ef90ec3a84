//! Independent oracles for the integration suites. Everything here takes
//! a brute-force route that shares no code with the library kernels it
//! checks: the Gramian comes from a Kronecker linear system, spectral
//! radii from dense (complex) eigensolves, and optima from grid search.

use nalgebra::{DMatrix, DVector};

/// Direct solve of `(I - A^T (x) A^T) vec(P) = vec(I)`; valid for n <= 12
/// where the n^2 x n^2 system stays cheap.
pub fn kronecker_gramian(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert!(n <= 12, "Kronecker oracle is for small n only");
    let at = a.transpose();
    let big = n * n;
    let mut system = DMatrix::<f64>::identity(big, big);
    // vec(A^T P A) = (A^T (x) A^T) vec(P) with column-major vec.
    for bi in 0..n {
        for bj in 0..n {
            let w = at[(bi, bj)];
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    system[(bi * n + i, bj * n + j)] -= w * at[(i, j)];
                }
            }
        }
    }
    let mut rhs = DVector::zeros(big);
    for i in 0..n {
        rhs[i * n + i] = 1.0;
    }
    let sol = system.lu().solve(&rhs).expect("resolvable Stein system");
    DMatrix::from_fn(n, n, |i, j| sol[j * n + i])
}

/// Spectral radius from the dense complex eigensolve.
pub fn eig_radius(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.norm()))
}

/// Largest eigenvalue of a symmetric matrix from the full eigensolve.
pub fn sym_max_eig(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &v| acc.max(v))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}
