//! Dense complex matrix kernel.
//!
//! Everything here works on small dense matrices (`p = n·k` is desk scale).
//! Hermitian eigendecomposition is delegated to nalgebra; the rest is
//! written directly against [`CMatrix`].

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// General dense complex matrix, row/column indexed from zero.
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default relative threshold for kernel and PSD decisions.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Largest exponent accepted by [`expm_herm`]; `exp(709.78)` is the last finite f64.
pub const MAX_EXP_ARG: f64 = 700.0;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// A complex Hermitian matrix.
///
/// Construction always symmetrizes, so the stored entries satisfy
/// `h[i,j] == conj(h[j,i])` exactly and the diagonal is real.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMatrix);

impl HermMatrix {
    /// Returns `(m + m*) / 2`. Panics if `m` is not square.
    pub fn symmetrized(m: &CMatrix) -> Self {
        assert!(m.is_square(), "HermMatrix requires a square matrix");
        let p = m.nrows();
        let mut out = CMatrix::zeros(p, p);
        for i in 0..p {
            out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..p {
                let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        HermMatrix(out)
    }

    /// Checked constructor: `m` must be square, finite, and Hermitian within
    /// `DEFAULT_REL_TOL·(1 + ‖m‖_F)`.
    pub fn try_from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "Hermitian matrix",
                expected: (m.nrows(), m.nrows()),
                found: (m.nrows(), m.ncols()),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("Hermitian matrix"));
        }
        let skew = (&m - m.adjoint()).norm();
        let scale = 1.0 + m.norm();
        if skew > DEFAULT_REL_TOL * scale {
            return Err(Error::NotHermitian { deviation: skew });
        }
        Ok(Self::symmetrized(&m))
    }

    pub fn zeros(p: usize) -> Self {
        HermMatrix(CMatrix::zeros(p, p))
    }

    pub fn identity(p: usize) -> Self {
        HermMatrix(CMatrix::identity(p, p))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let p = d.len();
        let mut m = CMatrix::zeros(p, p);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        HermMatrix(m)
    }

    /// Real symmetric matrix from a row-major slice.
    pub fn from_real_rows(p: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), p * p);
        let m = CMatrix::from_fn(p, p, |i, j| Complex64::new(rows[i * p + j], 0.0));
        Self::symmetrized(&m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        HermMatrix(self.0.map(|z| z * alpha))
    }

    /// `self += alpha · other`
    pub fn add_scaled(&mut self, alpha: f64, other: &HermMatrix) {
        assert_eq!(self.dim(), other.dim());
        self.0.zip_apply(&other.0, |a, b| *a += b * alpha);
    }

    pub fn sub(&self, other: &HermMatrix) -> Self {
        HermMatrix(&self.0 - &other.0)
    }

    pub fn add(&self, other: &HermMatrix) -> Self {
        HermMatrix(&self.0 + &other.0)
    }

    /// Unitary congruence `W* self W` for a `p × r` matrix `w`.
    pub fn compress(&self, w: &CMatrix) -> Self {
        Self::symmetrized(&(w.adjoint() * &self.0 * w))
    }

    /// `W self W*` for a `p × r` matrix `w` and `self` of size `r`.
    pub fn expand(&self, w: &CMatrix) -> Self {
        Self::symmetrized(&(w * &self.0 * w.adjoint()))
    }

    /// Diagonal part, as real numbers.
    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let p = self.dim();
        (0..p).all(|i| (0..p).all(|j| i == j || self.0[(i, j)].norm() <= tol))
    }
}

/// Spectral decomposition `h = U diag(λ) U*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigDecomp {
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

impl EigDecomp {
    pub fn reconstruct(&self) -> HermMatrix {
        self.map_spectrum(|l| l)
    }

    /// `U diag(f(λ)) U*`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let u = &self.eigenvectors;
        let p = u.nrows();
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = f(l);
            for i in 0..p {
                scaled[(i, j)] *= s;
            }
        }
        HermMatrix::symmetrized(&(scaled * u.adjoint()))
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn herm_eig(h: &HermMatrix) -> Result<EigDecomp> {
    let p = h.dim();
    if p == 0 {
        return Ok(EigDecomp {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(h.0.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or(Error::EigenNoConvergence { dim: p })?;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(p, p, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// Matrix exponential of a Hermitian matrix through its spectrum.
pub fn expm_herm(h: &HermMatrix) -> Result<HermMatrix> {
    let eig = herm_eig(h)?;
    expm_from_eig(&eig)
}

pub(crate) fn expm_from_eig(eig: &EigDecomp) -> Result<HermMatrix> {
    if eig.max() > MAX_EXP_ARG {
        return Err(Error::ExpOverflow {
            max_eigenvalue: eig.max(),
        });
    }
    Ok(eig.map_spectrum(f64::exp))
}

/// `Re tr(a·b)`.
pub fn trace_pair(a: &HermMatrix, b: &HermMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "trace pairing",
            expected: (a.dim(), a.dim()),
            found: (b.dim(), b.dim()),
        });
    }
    let v = trace_product(&a.0, &b.0);
    debug_assert!(v.im.abs() <= 1e-12 * (1.0 + a.frobenius_norm() * b.frobenius_norm()));
    Ok(v.re)
}

/// Real trace pairing for Hermitian arguments of equal size, no checks.
///
/// Uses `tr(ab) = Σ a[i,j]·conj(b[i,j])` which holds when `b` is Hermitian.
#[inline]
pub(crate) fn trace_pair_fast(a: &HermMatrix, b: &HermMatrix) -> f64 {
    a.0.iter()
        .zip(b.0.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// `tr(a·b)` for general square matrices of equal size.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let p = a.nrows();
    let mut acc = ZERO;
    for i in 0..p {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn min_eigenvalue(h: &HermMatrix) -> Result<f64> {
    Ok(herm_eig(h)?.min())
}

/// Kronecker product, `result[i·p_b + r, j·q_b + s] = a[i,j]·b[r,s]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (pa, qa) = a.shape();
    let (pb, qb) = b.shape();
    let mut out = CMatrix::zeros(pa * pb, qa * qb);
    for i in 0..pa {
        for j in 0..qa {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for r in 0..pb {
                for s in 0..qb {
                    out[(i * pb + r, j * qb + s)] = aij * b[(r, s)];
                }
            }
        }
    }
    out
}

/// Matrix unit `E_{ij}` of size `rows × cols` (zero-based indices).
pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    m[(i, j)] = ONE;
    m
}

/// Splits `C^dim` into the common kernel of `hs` and its orthogonal complement.
///
/// Each matrix is normalized to unit Frobenius norm and the normalized
/// matrices are stacked; right singular vectors whose singular value is at
/// most `tol` span the kernel. Returns `(kernel, support)` as orthonormal
/// column sets.
pub fn kernel_and_support(dim: usize, hs: &[HermMatrix], tol: f64) -> Result<(CMatrix, CMatrix)> {
    let nonzero: Vec<&HermMatrix> = hs.iter().filter(|h| h.frobenius_norm() > 0.0).collect();
    for h in hs {
        if h.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "common nullspace",
                expected: (dim, dim),
                found: (h.dim(), h.dim()),
            });
        }
    }
    if dim == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    if nonzero.is_empty() {
        return Ok((CMatrix::identity(dim, dim), CMatrix::zeros(dim, 0)));
    }
    let mut stacked = CMatrix::zeros(nonzero.len() * dim, dim);
    for (t, h) in nonzero.iter().enumerate() {
        let s = 1.0 / h.frobenius_norm();
        for i in 0..dim {
            for j in 0..dim {
                stacked[(t * dim + i, j)] = h.0[(i, j)] * s;
            }
        }
    }
    let svd = stacked
        .try_svd(false, true, 1e-15, 10_000)
        .ok_or(Error::EigenNoConvergence { dim })?;
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut kernel = Vec::new();
    let mut support = Vec::new();
    for (r, &sigma) in svd.singular_values.iter().enumerate() {
        let col: Vec<Complex64> = (0..dim).map(|i| v_t[(r, i)].conj()).collect();
        if sigma <= tol {
            kernel.push(col);
        } else {
            support.push(col);
        }
    }
    let to_matrix = |cols: &[Vec<Complex64>]| CMatrix::from_fn(dim, cols.len(), |i, j| cols[j][i]);
    Ok((to_matrix(&kernel), to_matrix(&support)))
}

/// Orthonormal basis of `∩ ker h` over `hs`, as columns of a `dim × d` matrix.
pub fn common_nullspace(dim: usize, hs: &[HermMatrix], tol: f64) -> Result<CMatrix> {
    Ok(kernel_and_support(dim, hs, tol)?.0)
}

/// `Σ coeffs[i] · mats[i]`, for a non-empty `mats` or an explicit `dim`.
pub fn real_combination(dim: usize, coeffs: &[f64], mats: &[&HermMatrix]) -> HermMatrix {
    debug_assert_eq!(coeffs.len(), mats.len());
    let mut out = CMatrix::zeros(dim, dim);
    for (&c, m) in coeffs.iter().zip(mats) {
        if c != 0.0 {
            out.zip_apply(&m.0, |a, b| *a += b * c);
        }
    }
    HermMatrix(out)
}
