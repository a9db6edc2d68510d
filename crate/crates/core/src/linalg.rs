//! Dense Hermitian linear algebra.
//!
//! Matrix functions are evaluated through a full Hermitian eigendecomposition,
//! `f(H) = V diag(f(λ)) V†`, so that logarithm and exponential of the same
//! matrix share one spectral factorization. Every composite product is
//! re-symmetrized on construction, which keeps the Hermitian invariant exact
//! rather than "up to drift".

use std::ops::{Add, Sub};

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default eigenvalue floor applied inside [`matrix_log`].
pub const DEFAULT_LOG_FLOOR: f64 = 1e-300;

/// Largest eigenvalue accepted by [`matrix_exp`]; `exp(709.8)` is the edge of `f64`.
pub const EXP_LIMIT: f64 = 700.0;

/// Relative tolerance below which a negative eigenvalue is treated as roundoff.
pub const PSD_TOL: f64 = 1e-10;

/// A dense `D x D` complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Wraps a matrix that is Hermitian up to `1e-12 * max|entry|`, symmetrizing it exactly.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        check_square(&entries)?;
        let scale = max_abs(&entries).max(f64::MIN_POSITIVE);
        let n = entries.nrows();
        for j in 0..n {
            for i in 0..=j {
                let skew = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if skew > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "matrix is not Hermitian: |a[{i},{j}] - conj(a[{j},{i}])| = {skew:e}"
                    )));
                }
            }
        }
        hermitize(&entries)
    }

    pub(crate) fn from_hermitian_unchecked(entries: DMatrix<C64>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diagonal: &[f64]) -> Self {
        let d = DVector::from_iterator(diagonal.len(), diagonal.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            entries: DMatrix::from_diagonal(&d),
        }
    }

    /// Builds the Hermitian matrix from row-major complex entries given as `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// The outer product `v v†`.
    pub fn outer(v: &DVector<C64>) -> Self {
        hermitize_unchecked(v * v.adjoint())
    }

    /// Builds `V diag(values) V†`.
    pub fn from_spectrum(values: &[f64], vectors: &DMatrix<C64>) -> Self {
        let mut scaled = vectors.clone();
        for (j, &lambda) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(lambda);
        }
        hermitize_unchecked(scaled * vectors.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    /// Real trace (the imaginary part of a Hermitian trace is identically zero).
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.map(|z| z * factor),
        }
    }

    /// `self + shift * I`.
    pub fn shift(&self, shift: f64) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..self.dim() {
            entries[(i, i)] += shift;
        }
        Self { entries }
    }

    /// `self * inner * self`, which is Hermitian whenever both factors are.
    pub fn sandwich(&self, inner: &HermitianMatrix) -> Result<Self> {
        check_dims(self.dim(), inner.dim())?;
        Ok(hermitize_unchecked(&self.entries * &inner.entries * &self.entries))
    }

    /// The congruence `U† self U` for a `D x D'` matrix `U`.
    pub fn compress(&self, basis: &DMatrix<C64>) -> Result<Self> {
        check_dims(self.dim(), basis.nrows())?;
        Ok(hermitize_unchecked(basis.adjoint() * &self.entries * basis))
    }

    /// The congruence `U self U†` for a `D x D'` matrix `U`, mapping back to dimension `D`.
    pub fn expand(&self, basis: &DMatrix<C64>) -> Result<Self> {
        check_dims(self.dim(), basis.ncols())?;
        Ok(hermitize_unchecked(basis * &self.entries * basis.adjoint()))
    }

    /// Frobenius norm of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &HermitianMatrix) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        let ab = &self.entries * &other.entries;
        let ba = &other.entries * &self.entries;
        Ok((ab - ba).norm())
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in Hermitian sum");
        HermitianMatrix {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in Hermitian difference");
        HermitianMatrix {
            entries: &self.entries - &rhs.entries,
        }
    }
}

/// Eigenvalues sorted ascending, with eigenvector `j` in column `j`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn top_eigenvector(&self) -> DVector<C64> {
        self.eigenvectors.column(self.dim() - 1).into_owned()
    }

    /// Spectral calculus: `V diag(f(λ)) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        HermitianMatrix::from_spectrum(&values, &self.eigenvectors)
    }
}

/// Returns `(A + A†) / 2`.
pub fn hermitize(a: &DMatrix<C64>) -> Result<HermitianMatrix> {
    check_square(a)?;
    Ok(hermitize_unchecked(a.clone()))
}

fn hermitize_unchecked(mut a: DMatrix<C64>) -> HermitianMatrix {
    let n = a.nrows();
    for j in 0..n {
        a[(j, j)] = C64::new(a[(j, j)].re, 0.0);
        for i in 0..j {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    HermitianMatrix { entries: a }
}

pub fn eigh(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    // nalgebra's own Hermitian eigensolver loses accuracy on complex input
    // with widely spread spectra, so the decomposition goes through faer.
    let n = h.dim();
    let m = &h.entries;
    let a = Mat::<C64>::from_fn(n, n, |r, c| m[(r, c)]);
    let eig = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenFailed {
        norm: h.frobenius_norm(),
    })?;
    let (values, vectors) = (eig.S(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    let eigenvalues = order.iter().map(|&i| values[i].re).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

pub fn matrix_exp(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eigh(h)?;
    if eig.max_eigenvalue() > EXP_LIMIT {
        return Err(Error::Overflow {
            max_eigenvalue: eig.max_eigenvalue(),
            limit: EXP_LIMIT,
        });
    }
    Ok(eig.apply(f64::exp))
}

/// Matrix logarithm with eigenvalues clamped below at `floor`.
pub fn matrix_log(p: &HermitianMatrix, floor: f64) -> Result<HermitianMatrix> {
    let eig = eigh(p)?;
    log_from_eigen(&eig, floor)
}

pub(crate) fn log_from_eigen(eig: &EigenDecomposition, floor: f64) -> Result<HermitianMatrix> {
    ensure_positive_definite(eig)?;
    Ok(eig.apply(|l| l.max(floor).ln()))
}

/// Rejects spectra with an eigenvalue below `-PSD_TOL * λ_max`.
pub(crate) fn ensure_positive_definite(eig: &EigenDecomposition) -> Result<()> {
    let (lo, hi) = (eig.min_eigenvalue(), eig.max_eigenvalue());
    if hi <= 0.0 || lo < -PSD_TOL * hi {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: lo,
            max_eigenvalue: hi,
        });
    }
    Ok(())
}

/// Complex Hilbert-Schmidt inner product `tr(A† B)`.
pub fn hs_inner_complex(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<C64> {
    check_dims(a.dim(), b.dim())?;
    Ok(a.entries
        .as_slice()
        .iter()
        .zip(b.entries.as_slice())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Hilbert-Schmidt inner product `tr(A† B)`, which is real for Hermitian arguments.
pub fn hs_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    // Re(conj(x) y) without forming the imaginary part.
    Ok(a.entries
        .as_slice()
        .iter()
        .zip(b.entries.as_slice())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum())
}

/// A density matrix: Hermitian, positive semidefinite and of unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let trace = matrix.trace();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::NotDensityMatrix(format!("trace is {trace}")));
        }
        let min = eigh(&matrix)?.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "smallest eigenvalue is {min:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_trusted(matrix: HermitianMatrix) -> Self {
        Self { matrix }
    }

    /// The maximally mixed state `I / D`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// `diag(p)` for a probability vector `p`.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(p))
    }

    /// The pure state `v v† / |v|²`.
    pub fn pure(v: &DVector<C64>) -> Result<Self> {
        let (rho, _) = trace_normalize(&HermitianMatrix::outer(v))?;
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.matrix
    }

    /// Running-mean update `self + (next - self) / count`.
    pub fn running_mean(&self, next: &DensityMatrix, count: usize) -> Self {
        let w = 1.0 / count as f64;
        let delta = &next.matrix - &self.matrix;
        Self {
            matrix: &self.matrix + &delta.scale(w),
        }
    }

    /// Convex combination `(1 - t) self + t other`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Self {
        Self {
            matrix: &self.matrix.scale(1.0 - t) + &other.matrix.scale(t),
        }
    }
}

/// Scales `P` to unit trace, returning the state and the original trace.
pub fn trace_normalize(p: &HermitianMatrix) -> Result<(DensityMatrix, f64)> {
    let tau = p.trace();
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::NotNormalizable { trace: tau });
    }
    Ok((DensityMatrix::from_trusted(p.scale(1.0 / tau)), tau))
}

fn check_square(a: &DMatrix<C64>) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
