//! Dense complex linear algebra used by every estimator.
//!
//! Matrices here are small (M ≤ 128 antennas, K ≤ M selected directions), so
//! everything is a plain row-major `Vec<Complex64>` with cubic-cost routines.
//! The Hermitian eigensolver is nalgebra's tridiagonal QL; the rest is local.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DoaError, Result};

/// Relative tolerance on ‖R − Rᴴ‖_F accepted by [`hermitian_evd`].
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Negative eigenvalues within this fraction of the largest magnitude are clamped to zero.
pub const EIGEN_CLAMP_TOL: f64 = 1e-10;
/// Rank guard on the Gram matrix spectrum used by [`pseudoinverse`].
pub const RANK_TOL: f64 = 1e-12;

thread_local! {
    static EVD_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of eigendecompositions performed on the current thread.
pub fn evd_call_count() -> u64 {
    EVD_CALLS.with(Cell::get)
}

pub fn reset_evd_call_count() {
    EVD_CALLS.with(|c| c.set(0));
}

/// Dense complex matrix, row-major.
///
/// Zero-sized dimensions are allowed so that an empty selection of steering
/// vectors is an `M × 0` matrix rather than a special case.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries; every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(DoaError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DoaError::Domain("matrix entry is not finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Stacks equally long vectors as columns of a `rows × columns.len()` matrix.
    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(DoaError::Dimension(format!(
                "column of length {} in a matrix with {rows} rows",
                bad.len()
            )));
        }
        Ok(Self::from_fn(rows, columns.len(), |r, c| columns[c][r]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_range(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.cols, "column range out of bounds");
        Self::from_fn(self.rows, end - start, |r, c| self[(r, start + c)])
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let split = self.cols;
        Self::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < split {
                self[(r, c)]
            } else {
                other[(r, c - split)]
            }
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// `selfᴴ · other` without materialising the adjoint.
    pub fn adjoint_mul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "adjoint_mul row mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a = self.row(k);
            let b = other.row(k);
            for (i, ai) in a.iter().enumerate() {
                let ai = ai.conj();
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, bj) in dst.iter_mut().zip(b) {
                    *d += ai * bj;
                }
            }
        }
        out
    }

    /// `self · otherᴴ`.
    pub fn mul_adjoint(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "mul_adjoint column mismatch");
        Self::from_fn(self.rows, other.rows, |i, j| {
            self.row(i)
                .iter()
                .zip(other.row(j))
                .map(|(a, b)| a * b.conj())
                .sum()
        })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (d, b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Multiplies column `j` by `weights[j]`.
    pub fn scale_columns(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.cols, "one weight per column");
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * weights[c])
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `(A + Aᴴ)/2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian_part of non-square matrix");
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    /// Largest entry modulus, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEvd {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, aligned with `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEvd {
    /// `V · diag(λ) · Vᴴ`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.eigenvectors
            .scale_columns(&self.eigenvalues)
            .mul_adjoint(&self.eigenvectors)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrised before decomposition. Negative eigenvalues whose
/// magnitude is within [`EIGEN_CLAMP_TOL`] of the largest are clamped to zero;
/// larger negatives are kept so that indefinite inputs stay representable.
pub fn hermitian_evd(r: &ComplexMatrix) -> Result<HermitianEvd> {
    if !r.is_square() || r.rows() == 0 {
        return Err(DoaError::Dimension(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    let norm = r.frobenius_norm();
    let skew = (r - &r.adjoint()).frobenius_norm();
    if skew > HERMITIAN_TOL * norm {
        return Err(DoaError::Contract(format!(
            "matrix is not Hermitian (‖R − Rᴴ‖_F = {skew:e}, ‖R‖_F = {norm:e})"
        )));
    }
    EVD_CALLS.with(|c| c.set(c.get() + 1));

    let eig = nalgebra::SymmetricEigen::new(r.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..r.rows()).collect();
    // stable: equal eigenvalues keep decomposition order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let eigenvalues = order
        .iter()
        .map(|&i| {
            let v = eig.eigenvalues[i];
            if v < 0.0 && -v <= EIGEN_CLAMP_TOL * scale {
                0.0
            } else {
                v
            }
        })
        .collect();
    let vecs = ComplexMatrix::from_nalgebra(&eig.eigenvectors);
    let eigenvectors = ComplexMatrix::from_fn(r.rows(), r.cols(), |row, col| vecs[(row, order[col])]);
    Ok(HermitianEvd {
        eigenvalues,
        eigenvectors,
    })
}

/// Canonical square root `V · diag(√λ)`, so that `R^{1/2} (R^{1/2})ᴴ = R`.
///
/// Keeping the eigenvector basis (rather than a Cholesky factor) is what makes
/// the split into signal and noise columns exact.
pub fn covariance_sqrt(evd: &HermitianEvd) -> Result<ComplexMatrix> {
    if let Some(&neg) = evd.eigenvalues.iter().find(|&&v| v < 0.0) {
        return Err(DoaError::Contract(format!(
            "covariance square root of a matrix with eigenvalue {neg:e}"
        )));
    }
    let roots: Vec<f64> = evd.eigenvalues.iter().map(|v| v.sqrt()).collect();
    Ok(evd.eigenvectors.scale_columns(&roots))
}

/// Moore–Penrose pseudoinverse `(AᴴA)⁻¹Aᴴ` of a tall full-column-rank matrix.
pub fn pseudoinverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows() < a.cols() {
        return Err(DoaError::Dimension(format!(
            "pseudoinverse needs a tall matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.cols() == 0 {
        return Ok(ComplexMatrix::zeros(0, a.rows()));
    }
    let gram = a.adjoint_mul(a).hermitian_part().to_nalgebra();
    let spectrum = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = spectrum
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > 0.0) || lo < RANK_TOL * hi {
        return Err(DoaError::Singular(format!(
            "steering matrix is rank deficient (Gram spectrum {lo:e}..{hi:e})"
        )));
    }
    let chol = nalgebra::Cholesky::new(gram)
        .ok_or_else(|| DoaError::Singular("Gram matrix is not positive definite".into()))?;
    let solved = chol.solve(&a.adjoint().to_nalgebra());
    Ok(ComplexMatrix::from_nalgebra(&solved))
}

/// Projector onto the column span of `a` and onto its orthogonal complement.
///
/// An empty `M × 0` input yields `(0, I)`.
pub fn projectors(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let m = a.rows();
    let p = if a.cols() == 0 {
        ComplexMatrix::zeros(m, m)
    } else {
        a.matmul(&pseudoinverse(a)?).hermitian_part()
    };
    let pc = &ComplexMatrix::identity(m) - &p;
    Ok((p, pc))
}
