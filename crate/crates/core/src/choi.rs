//! Choi matrices and Kraus operators of linear maps `M_n → M_k`.
//!
//! Rows and columns of a Choi matrix are indexed by pairs `(i, m)` with
//! `i < n`, `m < k`, ordered lexicographically (`r = i·k + m`). The entry at
//! `((i,m),(j,l))` is `φ(E_ij)[m,l]`, so the `k × k` block `(i,j)` is the
//! image of the matrix unit `E_ij`.

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, matrix_unit, CMatrix, HermMatrix, ZERO};

/// Relative rank threshold: eigenvalues at most `1e-9·λ_max` are treated as zero.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    n: usize,
    k: usize,
    phi: CMatrix,
}

impl ChoiMatrix {
    pub fn new(n: usize, k: usize, phi: CMatrix) -> Result<Self> {
        if phi.shape() != (n * k, n * k) {
            return Err(Error::DimensionMismatch {
                context: "Choi matrix",
                expected: (n * k, n * k),
                found: phi.shape(),
            });
        }
        Ok(Self { n, k, phi })
    }

    pub fn from_herm(n: usize, k: usize, phi: HermMatrix) -> Result<Self> {
        Self::new(n, k, phi.into_matrix())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.phi
    }

    /// The Choi matrix as a Hermitian matrix; fails for maps that do not
    /// preserve Hermiticity.
    pub fn hermitian(&self) -> Result<HermMatrix> {
        HermMatrix::try_from_matrix(self.phi.clone())
    }

    /// `1e-9 · λ_max`, the default threshold for numerical rank.
    pub fn rank_tolerance(&self) -> Result<f64> {
        let eig = herm_eig(&self.hermitian()?)?;
        Ok(DEFAULT_RANK_REL_TOL * eig.max().abs().max(f64::MIN_POSITIVE))
    }

    /// The image `φ(E_ij)` read off block `(i, j)`.
    pub fn unit_image(&self, i: usize, j: usize) -> CMatrix {
        self.phi.view((i * self.k, j * self.k), (self.k, self.k)).into_owned()
    }
}

/// A Kraus representation `φ(A) = Σ V_r* A V_r` with `n × k` elements.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    pub n: usize,
    pub k: usize,
    pub elements: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(n: usize, k: usize, elements: Vec<CMatrix>) -> Result<Self> {
        for v in &elements {
            if v.shape() != (n, k) {
                return Err(Error::DimensionMismatch {
                    context: "Kraus element",
                    expected: (n, k),
                    found: v.shape(),
                });
            }
        }
        Ok(Self { n, k, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Direct evaluation `Σ V* A V`.
    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.shape() != (self.n, self.n) {
            return Err(Error::DimensionMismatch {
                context: "Kraus application",
                expected: (self.n, self.n),
                found: a.shape(),
            });
        }
        let mut out = CMatrix::zeros(self.k, self.k);
        for v in &self.elements {
            out += v.adjoint() * a * v;
        }
        Ok(out)
    }
}

/// Assembles `Φ = [φ(E_lm)]` from the `n × n` table of unit images.
pub fn choi_from_unit_images(n: usize, k: usize, images: &[Vec<CMatrix>]) -> Result<ChoiMatrix> {
    if images.len() != n || images.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch {
            context: "unit image table",
            expected: (n, n),
            found: (images.len(), images.first().map_or(0, Vec::len)),
        });
    }
    let mut phi = CMatrix::zeros(n * k, n * k);
    for (l, row) in images.iter().enumerate() {
        for (m, img) in row.iter().enumerate() {
            if img.shape() != (k, k) {
                return Err(Error::DimensionMismatch {
                    context: "unit image",
                    expected: (k, k),
                    found: img.shape(),
                });
            }
            phi.view_mut((l * k, m * k), (k, k)).copy_from(img);
        }
    }
    ChoiMatrix::new(n, k, phi)
}

/// `φ(A)` with `φ(A)[m,l] = tr((Aᵀ ⊗ E_lm)·Φ) = Σ_ij a_ij Φ[(i,m),(j,l)]`.
pub fn apply_choi(c: &ChoiMatrix, a: &CMatrix) -> Result<CMatrix> {
    let (n, k) = (c.n, c.k);
    if a.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "Choi application",
            expected: (n, n),
            found: a.shape(),
        });
    }
    let mut out = CMatrix::zeros(k, k);
    for i in 0..n {
        for j in 0..n {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for m in 0..k {
                for l in 0..k {
                    out[(m, l)] += aij * c.phi[(i * k + m, j * k + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kraus elements from the spectral decomposition of a PSD Choi matrix.
///
/// Each eigenpair `(λ, u)` with `λ > tol` gives `V[i,m] = conj(√λ·u[(i,m)])`.
/// The eigenvector phase is fixed by making its largest-magnitude component
/// real positive.
pub fn choi_to_kraus(c: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    let h = c.hermitian()?;
    let eig = herm_eig(&h)?;
    if eig.min() < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    let (n, k) = (c.n, c.k);
    let mut elements = Vec::new();
    // descending eigenvalue order
    for (col, &lambda) in eig.eigenvalues.iter().enumerate().rev() {
        if lambda <= tol {
            continue;
        }
        let u = eig.eigenvectors.column(col);
        let pivot = (0..u.len())
            .fold(0, |best, r| if u[r].norm() > u[best].norm() { r } else { best });
        let phase = u[pivot].conj() / u[pivot].norm();
        let s = lambda.sqrt();
        let v = CMatrix::from_fn(n, k, |i, m| (u[i * k + m] * phase * s).conj());
        elements.push(v);
    }
    KrausSet::new(n, k, elements)
}

/// Choi matrix of `A ↦ Σ V* A V`, built from the images of matrix units.
pub fn kraus_to_choi(ks: &KrausSet) -> Result<ChoiMatrix> {
    let (n, k) = (ks.n, ks.k);
    let mut images = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(ks.apply(&matrix_unit(n, n, i, j))?);
        }
        images.push(row);
    }
    choi_from_unit_images(n, k, &images)
}

/// Numerical rank of `Φ`, which is the fewest Kraus elements that represent the map.
pub fn minimal_kraus_count(c: &ChoiMatrix, tol: f64) -> Result<usize> {
    let eig = herm_eig(&c.hermitian()?)?;
    if eig.min() < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.eigenvalues.iter().filter(|&&l| l > tol).count())
}

/// Choi matrix of the identity map on `M_n`.
pub fn identity_choi(n: usize) -> ChoiMatrix {
    kraus_to_choi(&KrausSet::new(n, n, vec![CMatrix::identity(n, n)]).unwrap()).unwrap()
}
