//! Dense matrix kernels: discrete Lyapunov (Gramian) solution, spectral
//! radius estimation, top singular value, Perron vectors, resolvent column
//! sums and Loewner-order checks.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for the entry-wise symmetry flag.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Default relative tolerance for the Gramian solve.
pub const DEFAULT_GRAMIAN_TOL: f64 = 1e-10;
/// Default cap on squared-Smith doubling steps.
pub const MAX_DOUBLINGS: usize = 64;
/// A matrix is treated as unstable when the spectral radius estimate
/// reaches `1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Dense square network matrix with cached spectral metadata.
///
/// Immutable after construction; all kernels below are pure functions of
/// their inputs, so values can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct NetworkMatrix {
    mat: DMatrix<f64>,
    symmetric: bool,
    nonnegative: bool,
    spectrum: OnceLock<SpectrumEstimate>,
}

impl NetworkMatrix {
    /// Wraps a dense square matrix, validating finiteness and computing
    /// the symmetry / nonnegativity flags.
    pub fn from_dense(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected nonempty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if let Some((i, j)) = find_nonfinite(&mat) {
            return Err(Error::BadSpec(format!("non-finite entry at ({i}, {j})")));
        }
        let symmetric = is_symmetric_within(&mat, SYMMETRY_TOL);
        let nonnegative = mat.iter().all(|&v| v >= 0.0);
        Ok(Self {
            mat,
            symmetric,
            nonnegative,
            spectrum: OnceLock::new(),
        })
    }

    /// Builds from a row-major slice of `n * n` entries.
    pub fn from_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for n = {}, got {}",
                n * n,
                n,
                entries.len()
            )));
        }
        Self::from_dense(DMatrix::from_row_slice(n, n, entries))
    }

    /// The zero matrix of size `n`.
    pub fn zeros(n: usize) -> Self {
        Self::from_dense(DMatrix::zeros(n, n)).expect("zero matrix is valid")
    }

    /// `scale * I`.
    pub fn scaled_identity(n: usize, scale: f64) -> Result<Self> {
        Self::from_dense(DMatrix::from_diagonal_element(n, n, scale))
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Cached spectral radius, if it has been computed.
    pub fn rho_estimate(&self) -> Option<f64> {
        self.spectrum.get().map(|s| s.rho)
    }

    /// Spectral radius estimate, computed once and cached.
    ///
    /// Symmetric matrices go through an exact symmetric eigensolve and
    /// triangular matrices read the diagonal; everything else uses the
    /// Gelfand formula `rho = lim ||A^k||^(1/k)` evaluated by repeated
    /// squaring with per-step Frobenius renormalization.
    pub fn spectral_radius(&self) -> Result<SpectrumEstimate> {
        if let Some(est) = self.spectrum.get() {
            return Ok(est.clone());
        }
        let est = self.compute_spectrum()?;
        let _ = self.spectrum.set(est.clone());
        Ok(est)
    }

    fn compute_spectrum(&self) -> Result<SpectrumEstimate> {
        let n = self.n();
        if self.symmetric {
            let rho = self
                .mat
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .fold(0.0f64, |acc, &v| acc.max(v.abs()));
            return Ok(SpectrumEstimate {
                rho,
                method: SpectralMethod::SymmetricEig,
                iterations: 0,
                uncertainty: f64::EPSILON * (n as f64) * rho.max(1.0),
            });
        }
        if is_triangular(&self.mat) {
            let rho = (0..n).fold(0.0f64, |acc, i| acc.max(self.mat[(i, i)].abs()));
            return Ok(SpectrumEstimate {
                rho,
                method: SpectralMethod::Triangular,
                iterations: 0,
                uncertainty: 0.0,
            });
        }
        gelfand_radius(&self.mat)
    }
}

/// How a spectral radius estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    SymmetricEig,
    GelfandSquaring,
    PowerIteration,
    /// Exact read-off of the diagonal for (block) triangular input.
    Triangular,
}

/// Spectral radius estimate with method and uncertainty band.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEstimate {
    pub rho: f64,
    pub method: SpectralMethod,
    pub iterations: usize,
    pub uncertainty: f64,
}

/// Solution of `P = A^T P A + I` with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct GramianSolution {
    /// Symmetric PSD solution; `P >= I` in the Loewner order.
    pub p: DMatrix<f64>,
    /// Frobenius norm of `P - A^T P A - I`.
    pub residual: f64,
    pub doublings_used: usize,
    pub converged: bool,
}

impl GramianSolution {
    pub fn trace(&self) -> f64 {
        self.p.trace()
    }
}

/// Solves the discrete Lyapunov fixed point `P = A^T P A + I` by
/// squared-Smith doubling: starting from `S = I`, `B = A`, accumulate
/// `S <- S + B^T S B` and square `B <- B^2`; after k steps S equals the
/// Gramian series truncated at `2^k` terms.
pub fn solve_gramian(a: &NetworkMatrix, tol: f64) -> Result<GramianSolution> {
    let est = a.spectral_radius()?;
    let limit = 1.0 - STABILITY_MARGIN;
    if est.rho >= limit {
        return Err(Error::UnstableMatrix {
            rho: est.rho,
            limit,
        });
    }
    let n = a.n();
    let tol = tol.abs().max(f64::MIN_POSITIVE);
    let mut s = DMatrix::<f64>::identity(n, n);
    let mut b = a.entries().clone();
    let mut doublings = 0usize;
    let mut update_norm = f64::INFINITY;

    for _ in 0..MAX_DOUBLINGS {
        if b.iter().all(|&v| v == 0.0) {
            // Nilpotent tail: every remaining update is exactly zero.
            update_norm = 0.0;
            break;
        }
        let t = mul_adaptive(&s, &b);
        let mut u = mul_transpose_adaptive(&b, &t);
        symmetrize_in_place(&mut u);
        // The update is a congruence of PSD S, so the accumulator trace
        // never decreases.
        debug_assert!(u.trace() >= -1e-12 * (1.0 + s.trace()));
        update_norm = u.norm();
        s += &u;
        doublings += 1;
        if update_norm <= tol {
            break;
        }
        b = mul_adaptive(&b, &b);
    }

    let residual = {
        let t = mul_adaptive(&s, a.entries());
        let mut r = mul_transpose_adaptive(a.entries(), &t);
        r -= &s;
        for i in 0..n {
            r[(i, i)] += 1.0;
        }
        r.norm()
    };
    let rel_bound = tol * (1.0 + s.norm());
    let converged = residual <= rel_bound;
    if update_norm > tol && !converged {
        return Err(Error::NoConvergence {
            iterations: doublings,
            residual,
        });
    }
    Ok(GramianSolution {
        p: s,
        residual,
        doublings_used: doublings,
        converged,
    })
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with
/// Aitken-extrapolated stopping; equals the top singular value for PSD
/// input.
pub fn top_singular_value(p: &DMatrix<f64>) -> Result<f64> {
    let n = p.nrows();
    if n != p.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            n,
            p.ncols()
        )));
    }
    let gap = symmetry_gap(p);
    if gap > 1e-10 {
        return Err(Error::NotSymmetric { gap });
    }
    if let Some(maxd) = diagonal_max(p) {
        // Exactly diagonal PSD input: sigma_1 is the largest diagonal entry.
        return Ok(maxd);
    }

    let mut v = DVector::from_fn(n, |i, _| 1.0 + 1e-3 * ((i + 1) as f64) / (n as f64));
    v /= v.norm();
    let mut lambda_prev2 = 0.0f64;
    let mut lambda_prev = 0.0f64;
    let mut lambda = 0.0f64;
    let rel_tol = 1e-11;
    let max_iter = 200_000usize;

    for it in 0..max_iter {
        let w = p * &v;
        lambda = v.dot(&w);
        let nrm = w.norm();
        if nrm == 0.0 {
            return Ok(0.0);
        }
        v = w / nrm;
        if it >= 2 {
            let d1 = lambda - lambda_prev;
            let d0 = lambda_prev - lambda_prev2;
            let scale = lambda.abs().max(f64::MIN_POSITIVE);
            if d1.abs() <= rel_tol * scale && d0.abs() <= 4.0 * rel_tol * scale {
                return Ok(lambda);
            }
            if d0 != 0.0 {
                let r = d1 / d0;
                if r > 0.0 && r < 0.9999 {
                    let projected = d1 * r / (1.0 - r);
                    if projected.abs() <= rel_tol * scale {
                        // Rayleigh quotients increase monotonically for PSD
                        // input, so the Aitken correction only tightens.
                        return Ok(lambda + projected);
                    }
                }
            }
        }
        lambda_prev2 = lambda_prev;
        lambda_prev = lambda;
    }
    Ok(lambda)
}

/// Perron data of a nonnegative matrix: dominant eigenvalue with right
/// eigenvector and left eigenvector, both normalized to sum 1.
#[derive(Debug, Clone)]
pub struct PerronVectors {
    pub lambda_pf: f64,
    pub v_right: DVector<f64>,
    pub pi_left: DVector<f64>,
    pub iterations: usize,
    /// False when the iteration cap was hit; the last iterates are still
    /// returned.
    pub converged: bool,
}

/// Power iteration on `A` and `A^T` with a diagonal shift to break
/// periodicity (cycles and stars are periodic). Shifting by `s I` leaves
/// every eigenvector unchanged and moves the Perron root by exactly `s`,
/// which is subtracted back out; a unit shift turns the periodic
/// `-lambda_PF` branch into a well-separated subdominant mode.
pub fn perron_vector(a: &NetworkMatrix) -> Result<PerronVectors> {
    if let Some((i, j)) = find_negative(a.entries()) {
        return Err(Error::NotNonnegative { i, j });
    }
    let (lambda_r, v_right, it_r, conv_r) = perron_one_side(a.entries(), false);
    let (_, pi_left, it_l, conv_l) = perron_one_side(a.entries(), true);
    Ok(PerronVectors {
        lambda_pf: lambda_r,
        v_right,
        pi_left,
        iterations: it_r.max(it_l),
        converged: conv_r && conv_l,
    })
}

const PERRON_SHIFT: f64 = 1.0;

fn perron_one_side(a: &DMatrix<f64>, transpose: bool) -> (f64, DVector<f64>, usize, bool) {
    let n = a.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut lambda = 0.0f64;
    let max_iter = 100_000usize;
    for it in 0..max_iter {
        let mut w = if transpose { a.tr_mul(&v) } else { a * &v };
        w.axpy(PERRON_SHIFT, &v, 1.0);
        let total: f64 = w.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return (lambda, v, it, false);
        }
        let next = w / total;
        let new_lambda = total - PERRON_SHIFT;
        let dv = (&next - &v).amax();
        let dl = (new_lambda - lambda).abs();
        v = next;
        lambda = new_lambda;
        if dv <= 1e-10 && dl <= 1e-10 * lambda.abs().max(1.0) {
            return (lambda, v, it + 1, true);
        }
    }
    (lambda, v, max_iter, false)
}

/// Column sums of the resolvent `(I - A)^{-1}`, obtained from one
/// partial-pivot solve of `(I - A)^T c = 1`.
pub fn resolvent_column_sums(a: &NetworkMatrix) -> Result<DVector<f64>> {
    let est = a.spectral_radius()?;
    let limit = 1.0 - STABILITY_MARGIN;
    if est.rho >= limit {
        return Err(Error::UnstableMatrix {
            rho: est.rho,
            limit,
        });
    }
    let n = a.n();
    let mut m = -a.entries().transpose();
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let lu = m.lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v.abs()));
    if min_pivot < 1e-14 {
        return Err(Error::SingularSystem { pivot: min_pivot });
    }
    lu.solve(&DVector::from_element(n, 1.0))
        .ok_or(Error::SingularSystem { pivot: min_pivot })
}

/// True iff `X <= Y` in the Loewner order up to `tol`: the smallest
/// eigenvalue of `Y - X` is at least `-tol`.
pub fn psd_order_holds(x: &DMatrix<f64>, y: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if x.shape() != y.shape() || x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected equal square shapes, got {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let mut d = y - x;
    symmetrize_in_place(&mut d);
    let min_eig = d
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    Ok(min_eig >= -tol)
}

/// Symmetric eigendecomposition with a reproducible convention:
/// eigenvalues descending, each eigenvector's first non-tiny component
/// positive, near-degenerate pairs ordered by their first distinguishing
/// coordinate.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut sym = m.clone();
    symmetrize_in_place(&mut sym);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut cols: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|j| {
            let mut col = eig.eigenvectors.column(j).clone_owned();
            fix_sign(&mut col);
            (eig.eigenvalues[j], col)
        })
        .collect();
    cols.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(&a.1, &b.1))
    });
    let values = DVector::from_iterator(n, cols.iter().map(|c| c.0));
    let mut vectors = DMatrix::zeros(n, n);
    for (j, (_, col)) in cols.iter().enumerate() {
        vectors.set_column(j, col);
    }
    (values, vectors)
}

fn fix_sign(col: &mut DVector<f64>) {
    let scale = col.amax().max(f64::MIN_POSITIVE);
    for &v in col.iter() {
        if v.abs() > 1e-12 * scale {
            if v < 0.0 {
                *col *= -1.0;
            }
            return;
        }
    }
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

// ---------------------------------------------------------------------------
// Matrix CSV format: first line "n=<int>", then n rows of comma-separated
// decimal floats (dot separator, locale independent).
// ---------------------------------------------------------------------------

pub fn read_matrix_csv<R: BufRead>(reader: R) -> Result<NetworkMatrix> {
    let mut lines = reader.lines().enumerate();
    let (line_no, first) = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })
        .and_then(|(i, l)| Ok((i + 1, l?)))?;
    let n: usize = first
        .trim()
        .strip_prefix("n=")
        .ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected 'n=<int>', got {first:?}"),
        })?
        .trim()
        .parse()
        .map_err(|e| Error::Parse {
            line: line_no,
            msg: format!("bad dimension: {e}"),
        })?;
    let mut entries = Vec::with_capacity(n * n);
    let mut rows_read = 0usize;
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_float_row(&line, i + 1)?;
        if row.len() != n {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {} values, got {}", n, row.len()),
            });
        }
        entries.extend_from_slice(&row);
        rows_read += 1;
        if rows_read == n {
            break;
        }
    }
    if rows_read != n {
        return Err(Error::Parse {
            line: rows_read + 1,
            msg: format!("expected {} rows, got {}", n, rows_read),
        });
    }
    NetworkMatrix::from_rows(n, &entries)
}

pub(crate) fn parse_float_row(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad float {tok:?}: {e}"),
            })
        })
        .collect()
}

pub fn write_matrix_csv<W: Write>(m: &NetworkMatrix, mut w: W) -> Result<()> {
    writeln!(w, "n={}", m.n())?;
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| format!("{:.16e}", m.entry(i, j))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Internal kernels
// ---------------------------------------------------------------------------

/// Gelfand estimate by repeated squaring with Frobenius renormalization.
/// Tracks `A^(2^k) = exp(log_scale) * B` with `||B||_F = 1`; the estimate
/// `exp(log_scale / 2^k)` decreases toward the spectral radius.
fn gelfand_radius(a: &DMatrix<f64>) -> Result<SpectrumEstimate> {
    let scale = a.norm();
    if scale == 0.0 {
        return Ok(SpectrumEstimate {
            rho: 0.0,
            method: SpectralMethod::GelfandSquaring,
            iterations: 0,
            uncertainty: 0.0,
        });
    }
    if !scale.is_finite() {
        return Err(Error::Overflow);
    }
    let mut b = a / scale;
    let mut log_scale = scale.ln();
    let mut estimate = scale;
    let max_squarings = 40usize;
    for k in 1..=max_squarings {
        let raw = mul_adaptive(&b, &b);
        let nrm = raw.norm();
        if nrm == 0.0 {
            // Nilpotent collapse.
            return Ok(SpectrumEstimate {
                rho: 0.0,
                method: SpectralMethod::GelfandSquaring,
                iterations: k,
                uncertainty: 0.0,
            });
        }
        if !nrm.is_finite() {
            return Err(Error::Overflow);
        }
        b = raw / nrm;
        log_scale = 2.0 * log_scale + nrm.ln();
        let next = (log_scale / (1u64 << k) as f64).exp();
        let diff = (next - estimate).abs();
        estimate = next;
        if diff < 1e-8 {
            return Ok(SpectrumEstimate {
                rho: estimate,
                method: SpectralMethod::GelfandSquaring,
                iterations: k,
                uncertainty: diff,
            });
        }
        if k == max_squarings {
            return Ok(SpectrumEstimate {
                rho: estimate,
                method: SpectralMethod::GelfandSquaring,
                iterations: k,
                uncertainty: diff,
            });
        }
    }
    unreachable!("loop always returns")
}

fn find_nonfinite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Some((i, j));
            }
        }
    }
    None
}

fn find_negative(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] < 0.0 {
                return Some((i, j));
            }
        }
    }
    None
}

fn is_symmetric_within(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

pub(crate) fn symmetry_gap(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut gap = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            gap = gap.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    gap
}

fn is_triangular(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let mut lower_zero = true;
    let mut upper_zero = true;
    for i in 0..n {
        for j in 0..n {
            if i > j && m[(i, j)] != 0.0 {
                lower_zero = false;
            }
            if i < j && m[(i, j)] != 0.0 {
                upper_zero = false;
            }
        }
    }
    lower_zero || upper_zero
}

/// Max diagonal entry if the matrix is exactly diagonal, else `None`.
fn diagonal_max(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    Some((0..n).fold(f64::NEG_INFINITY, |acc, i| acc.max(m[(i, i)])))
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Nonzero count used to route products through the sparse kernels.
fn nnz(m: &DMatrix<f64>) -> usize {
    m.iter().filter(|&&v| v != 0.0).count()
}

const SPARSE_FRACTION: f64 = 0.125;

/// `a * b`, routed through a sparsity-aware kernel when either factor is
/// mostly zeros (shift-like matrices from nilpotent doubling chains make
/// the dense path needlessly cubic).
pub(crate) fn mul_adaptive(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let budget = ((n * n) as f64 * SPARSE_FRACTION) as usize;
    if nnz(b) <= budget {
        return mul_sparse_rhs(a, b);
    }
    if nnz(a) <= budget {
        return mul_sparse_lhs(a, b);
    }
    a * b
}

/// `a^T * b` with the same sparsity routing.
pub(crate) fn mul_transpose_adaptive(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let budget = ((n * n) as f64 * SPARSE_FRACTION) as usize;
    if nnz(a) <= budget {
        return mul_sparse_lhs_transposed(a, b);
    }
    a.tr_mul(b)
}

/// `a * b` for sparse `b`: accumulate scaled columns of `a`.
fn mul_sparse_rhs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, k) = (a.nrows(), a.ncols());
    let p = b.ncols();
    let mut c = DMatrix::zeros(m, p);
    for j in 0..p {
        for l in 0..k {
            let w = b[(l, j)];
            if w != 0.0 {
                let mut cj = c.column_mut(j);
                cj.axpy(w, &a.column(l), 1.0);
            }
        }
    }
    c
}

/// `a * b` for sparse `a`.
fn mul_sparse_lhs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let p = b.ncols();
    let mut nonzeros = Vec::new();
    for l in 0..a.ncols() {
        for i in 0..m {
            let w = a[(i, l)];
            if w != 0.0 {
                nonzeros.push((i, l, w));
            }
        }
    }
    let mut c = DMatrix::zeros(m, p);
    for j in 0..p {
        for &(i, l, w) in &nonzeros {
            c[(i, j)] += w * b[(l, j)];
        }
    }
    c
}

/// `a^T * b` for sparse `a`.
fn mul_sparse_lhs_transposed(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.ncols();
    let p = b.ncols();
    let mut nonzeros = Vec::new();
    for l in 0..a.ncols() {
        for i in 0..a.nrows() {
            let w = a[(i, l)];
            if w != 0.0 {
                nonzeros.push((l, i, w));
            }
        }
    }
    let mut c = DMatrix::zeros(m, p);
    for j in 0..p {
        for &(i, l, w) in &nonzeros {
            c[(i, j)] += w * b[(l, j)];
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dl(n: usize) -> NetworkMatrix {
        let mut m = DMatrix::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        NetworkMatrix::from_dense(m).unwrap()
    }

    #[test]
    fn gramian_of_zero_matrix_is_identity() {
        let a = NetworkMatrix::zeros(3);
        let g = solve_gramian(&a, 1e-10).unwrap();
        assert_eq!(g.p, DMatrix::identity(3, 3));
        assert_eq!(g.residual, 0.0);
        assert!(g.converged);
    }

    #[test]
    fn gramian_of_directed_line_is_descending_diagonal() {
        let g = solve_gramian(&dl(5), 1e-10).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 4.0, 3.0, 2.0, 1.0]));
        assert_eq!(g.p, expected);
    }

    #[test]
    fn gramian_of_scaled_identity_is_geometric_series() {
        let a = NetworkMatrix::scaled_identity(3, 0.5).unwrap();
        let g = solve_gramian(&a, 1e-12).unwrap();
        for i in 0..3 {
            assert_relative_eq!(g.p[(i, i)], 4.0 / 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn gramian_rejects_unstable_input() {
        let a = NetworkMatrix::scaled_identity(2, 1.0).unwrap();
        assert!(matches!(
            solve_gramian(&a, 1e-10),
            Err(Error::UnstableMatrix { .. })
        ));
    }

    #[test]
    fn spectral_radius_of_directed_line_is_zero() {
        let est = dl(8).spectral_radius().unwrap();
        assert!(est.rho <= 1e-8);
    }

    #[test]
    fn spectral_radius_of_symmetric_uses_eigensolve() {
        let a = NetworkMatrix::from_rows(2, &[0.0, 0.5, 0.5, 0.0]).unwrap();
        let est = a.spectral_radius().unwrap();
        assert_eq!(est.method, SpectralMethod::SymmetricEig);
        assert_relative_eq!(est.rho, 0.5, max_relative = 1e-12);
        assert!(est.uncertainty <= 1e-10);
    }

    #[test]
    fn gelfand_matches_known_radius_of_rank_one() {
        // 0.5 * ones * e1^T has eigenvalues {0.5, 0, ...}.
        let n = 5;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, 0)] = 0.5;
        }
        let a = NetworkMatrix::from_dense(m).unwrap();
        let est = a.spectral_radius().unwrap();
        assert_relative_eq!(est.rho, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn top_singular_value_of_diagonal() {
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 4.0, 3.0, 2.0, 1.0]));
        assert_relative_eq!(top_singular_value(&p).unwrap(), 5.0, max_relative = 1e-10);
    }

    #[test]
    fn top_singular_value_of_identity() {
        let p = DMatrix::<f64>::identity(7, 7);
        assert_relative_eq!(top_singular_value(&p).unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn top_singular_value_rejects_asymmetric() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            top_singular_value(&p),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn perron_of_diagonal_picks_dominant_axis() {
        let a = NetworkMatrix::from_rows(2, &[0.3, 0.0, 0.0, 0.7]).unwrap();
        let pv = perron_vector(&a).unwrap();
        assert_relative_eq!(pv.lambda_pf, 0.7, epsilon = 1e-9);
        assert!(pv.v_right[1] > 1.0 - 1e-6);
    }

    #[test]
    fn perron_rejects_negative_entries() {
        let a = NetworkMatrix::from_rows(2, &[0.3, -0.1, 0.0, 0.7]).unwrap();
        assert!(matches!(
            perron_vector(&a),
            Err(Error::NotNonnegative { .. })
        ));
    }

    #[test]
    fn resolvent_sums_of_scaled_identity() {
        let a = NetworkMatrix::scaled_identity(5, 0.5).unwrap();
        let c = resolvent_column_sums(&a).unwrap();
        for i in 0..5 {
            assert_relative_eq!(c[i], 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn resolvent_sums_of_rank_one_hub() {
        // A = 0.5 * ones * e1^T at n = 5 gives c = (6, 1, 1, 1, 1).
        let n = 5;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, 0)] = 0.5;
        }
        let a = NetworkMatrix::from_dense(m).unwrap();
        let c = resolvent_column_sums(&a).unwrap();
        assert_relative_eq!(c[0], 6.0, max_relative = 1e-10);
        for i in 1..n {
            assert_relative_eq!(c[i], 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn psd_order_on_scaled_identities() {
        let i = DMatrix::<f64>::identity(3, 3);
        let two = 2.0 * &i;
        assert!(psd_order_holds(&i, &two, 1e-10).unwrap());
        assert!(!psd_order_holds(&two, &i, 1e-10).unwrap());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let a = NetworkMatrix::from_rows(2, &[0.0, 0.25, 0.25, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&a, &mut buf).unwrap();
        let back = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(back.entries(), a.entries());
    }

    #[test]
    fn csv_rejects_malformed_header() {
        let err = read_matrix_csv("m=3\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn sparse_and_dense_products_agree() {
        let mut b = DMatrix::zeros(6, 6);
        b[(1, 0)] = 2.0;
        b[(4, 3)] = -1.5;
        let a = DMatrix::from_fn(6, 6, |i, j| (i as f64 - 2.0) * 0.3 + j as f64 * 0.1);
        let dense = &a * &b;
        assert_eq!(mul_adaptive(&a, &b), dense);
        let dense_t = a.tr_mul(&b);
        let mut a_sparse = DMatrix::zeros(6, 6);
        a_sparse[(0, 2)] = 1.25;
        assert_eq!(
            mul_transpose_adaptive(&a_sparse, &b),
            a_sparse.tr_mul(&b)
        );
        let _ = dense_t;
    }

    #[test]
    fn sorted_eigen_is_descending_with_positive_leading_sign() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = sorted_symmetric_eigen(&m);
        assert!(vals[0] >= vals[1]);
        assert_relative_eq!(vals[0], 3.0, max_relative = 1e-12);
        assert!(vecs[(0, 0)] > 0.0);
    }
}
