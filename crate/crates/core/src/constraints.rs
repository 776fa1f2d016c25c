//! From interpolation data to real trace constraints on the Choi matrix.
//!
//! The entry `(m,l)` of `φ(A_ν) = B_ν` reads `tr((A_νᵀ ⊗ E_lm)·Φ) = (B_ν)[m,l]`.
//! Those raw constraints are complex; [`hermitize`] splits each into
//! selfadjoint real/imaginary parts so that the system has the form
//! `tr(C·X) = b` with `C` Hermitian and `b` real.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kernel_and_support, kron, matrix_unit, trace_pair_fast, CMatrix, HermMatrix};

/// Interpolation data: find `φ ∈ CP(M_n, M_k)` with `φ(A_ν) = B_ν`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub n: usize,
    pub k: usize,
    /// `(A_ν, B_ν)` with `A_ν` of size `n × n` and `B_ν` of size `k × k`.
    pub pairs: Vec<(CMatrix, CMatrix)>,
    pub trace_preserving: bool,
}

impl ProblemInstance {
    pub fn new(n: usize, k: usize, pairs: Vec<(CMatrix, CMatrix)>, trace_preserving: bool) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidInstance("dimensions n and k must be positive".into()));
        }
        if pairs.is_empty() {
            return Err(Error::InvalidInstance("at least one pair (A, B) is required".into()));
        }
        for (nu, (a, b)) in pairs.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::InvalidInstance(format!(
                    "pair {nu}: A is {}×{}, expected {n}×{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if b.shape() != (k, k) {
                return Err(Error::InvalidInstance(format!(
                    "pair {nu}: B is {}×{}, expected {k}×{k}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if a.iter().chain(b.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInstance(format!("pair {nu}: non-finite entry")));
            }
        }
        Ok(Self {
            n,
            k,
            pairs,
            trace_preserving,
        })
    }

    pub fn p(&self) -> usize {
        self.n * self.k
    }
}

/// Where a constraint came from. Indices are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Entry `(m, l)` of `φ(A_ν) = B_ν`.
    Pair { nu: usize, m: usize, l: usize },
    /// `tr φ(E_ij) = δ_ij`.
    TracePreserving { i: usize, j: usize },
}

/// Which selfadjoint piece of a raw constraint this is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    /// The raw matrix was already Hermitian with a real target.
    Selfadjoint,
    /// `(C + C*, 2 Re b)`
    Real,
    /// `(i(C − C*), −2 Im b)`
    Imag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tag {
    pub origin: Origin,
    pub part: Part,
}

#[derive(Clone, Debug)]
pub struct RawConstraint {
    pub c: CMatrix,
    pub b: Complex64,
    pub origin: Origin,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub c: HermMatrix,
    pub b: f64,
    pub tag: Tag,
}

/// `tr(C_ι·X) = b_ι` for `ι = 0..q` over `p × p` Hermitian `X`.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub p: usize,
    pub constraints: Vec<Constraint>,
}

impl ConstraintSystem {
    pub fn new(p: usize, constraints: Vec<Constraint>) -> Result<Self> {
        for c in &constraints {
            if c.c.dim() != p {
                return Err(Error::DimensionMismatch {
                    context: "constraint matrix",
                    expected: (p, p),
                    found: (c.c.dim(), c.c.dim()),
                });
            }
        }
        Ok(Self { p, constraints })
    }

    /// Builds an untagged system from bare `(C, b)` pairs.
    pub fn from_pairs(p: usize, pairs: Vec<(HermMatrix, f64)>) -> Result<Self> {
        let constraints = pairs
            .into_iter()
            .enumerate()
            .map(|(nu, (c, b))| Constraint {
                c,
                b,
                tag: Tag {
                    origin: Origin::Pair { nu, m: 0, l: 0 },
                    part: Part::Selfadjoint,
                },
            })
            .collect();
        Self::new(p, constraints)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn matrices(&self) -> Vec<&HermMatrix> {
        self.constraints.iter().map(|c| &c.c).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.b).collect()
    }

    /// `Σ x_ι C_ι`
    pub fn combine(&self, x: &[f64]) -> HermMatrix {
        assert_eq!(x.len(), self.len(), "coefficient vector length");
        let mut s = HermMatrix::zeros(self.p);
        for (c, &xi) in self.constraints.iter().zip(x) {
            if xi != 0.0 {
                s.add_scaled(xi, &c.c);
            }
        }
        s
    }

    /// Signed residuals `tr(C_ι X) − b_ι`.
    pub fn residuals(&self, x: &HermMatrix) -> Result<Vec<f64>> {
        if x.dim() != self.p {
            return Err(Error::DimensionMismatch {
                context: "residual evaluation",
                expected: (self.p, self.p),
                found: (x.dim(), x.dim()),
            });
        }
        Ok(self
            .constraints
            .iter()
            .map(|c| trace_pair_fast(&c.c, x) - c.b)
            .collect())
    }

    /// Real Gram matrix `G_ικ = tr(C_ι C_κ)`, row-major.
    pub fn gram(&self) -> nalgebra::DMatrix<f64> {
        let q = self.len();
        let mut g = nalgebra::DMatrix::zeros(q, q);
        for i in 0..q {
            for j in i..q {
                let v = trace_pair_fast(&self.constraints[i].c, &self.constraints[j].c);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }
}

/// One raw complex constraint per `(ν, m, l)`: `C = A_νᵀ ⊗ E_lm`, `b = (B_ν)[m,l]`.
pub fn assemble(inst: &ProblemInstance) -> Vec<RawConstraint> {
    let k = inst.k;
    let mut out = Vec::with_capacity(inst.pairs.len() * k * k);
    for (nu, (a, b)) in inst.pairs.iter().enumerate() {
        let at = a.transpose();
        for m in 0..k {
            for l in 0..k {
                out.push(RawConstraint {
                    c: kron(&at, &matrix_unit(k, k, l, m)),
                    b: b[(m, l)],
                    origin: Origin::Pair { nu, m, l },
                });
            }
        }
    }
    out
}

fn is_selfadjoint(c: &CMatrix) -> bool {
    (c - c.adjoint()).norm() <= 1e-14 * (1.0 + c.norm())
}

fn mirror(origin: Origin) -> Option<Origin> {
    match origin {
        Origin::Pair { nu, m, l } if m != l => Some(Origin::Pair { nu, m: l, l: m }),
        Origin::TracePreserving { i, j } if i != j => Some(Origin::TracePreserving { i: j, j: i }),
        _ => None,
    }
}

fn is_lower(origin: Origin) -> bool {
    match origin {
        Origin::Pair { m, l, .. } => m > l,
        Origin::TracePreserving { i, j } => i > j,
    }
}

/// Whether every off-diagonal raw constraint has its conjugate partner
/// `(C*, conj b)` in the list, i.e. the data are selfadjoint.
fn conjugate_closed(raw: &[RawConstraint]) -> bool {
    raw.iter().all(|r| {
        let Some(target) = mirror(r.origin) else {
            return true;
        };
        raw.iter().any(|s| {
            s.origin == target
                && (&s.c - r.c.adjoint()).norm() <= 1e-14 * (1.0 + r.c.norm())
                && (s.b - r.b.conj()).norm() <= 1e-14 * (1.0 + r.b.norm())
        })
    })
}

/// Replaces complex constraints by equivalent selfadjoint real ones.
///
/// When the raw list is closed under conjugation (all `A_ν`, `B_ν`
/// selfadjoint) only the upper couples `m ≤ l` are kept, since the lower
/// ones carry the same equations.
pub fn hermitize(p: usize, raw: &[RawConstraint]) -> Result<ConstraintSystem> {
    let dedupe = conjugate_closed(raw);
    let mut out = Vec::new();
    for (index, r) in raw.iter().enumerate() {
        if dedupe && is_lower(r.origin) {
            continue;
        }
        hermitize_one(index, r, &mut out)?;
    }
    ConstraintSystem::new(p, out)
}

fn hermitize_one(index: usize, r: &RawConstraint, out: &mut Vec<Constraint>) -> Result<()> {
    let scale = 1.0 + r.b.norm();
    if is_selfadjoint(&r.c) {
        if r.b.im.abs() > 1e-14 * scale {
            return Err(Error::Infeasible {
                index,
                reason: format!("selfadjoint constraint with non-real target {}", r.b),
            });
        }
        if r.c.norm() == 0.0 {
            if r.b.re != 0.0 {
                return Err(Error::Infeasible {
                    index,
                    reason: "zero constraint matrix with nonzero target".into(),
                });
            }
            return Ok(());
        }
        out.push(Constraint {
            c: HermMatrix::symmetrized(&r.c),
            b: r.b.re,
            tag: Tag {
                origin: r.origin,
                part: Part::Selfadjoint,
            },
        });
        return Ok(());
    }
    let i = Complex64::new(0.0, 1.0);
    let parts = [
        (&r.c + r.c.adjoint(), 2.0 * r.b.re, Part::Real),
        ((&r.c - r.c.adjoint()) * i, -2.0 * r.b.im, Part::Imag),
    ];
    for (c, b, part) in parts {
        if c.norm() <= 1e-14 * (1.0 + r.c.norm()) {
            if b.abs() > 1e-14 * scale {
                return Err(Error::Infeasible {
                    index,
                    reason: format!("{part:?} part of the constraint vanishes but its target is {b}"),
                });
            }
            continue;
        }
        out.push(Constraint {
            c: HermMatrix::symmetrized(&c),
            b,
            tag: Tag {
                origin: r.origin,
                part,
            },
        });
    }
    Ok(())
}

/// Raw trace-preservation constraints `tr((E_ijᵀ ⊗ I_k)·Φ) = δ_ij`.
pub fn trace_preserving_raw(n: usize, k: usize) -> Vec<RawConstraint> {
    let ik = CMatrix::identity(k, k);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(RawConstraint {
                c: kron(&matrix_unit(n, n, j, i), &ik),
                b: Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0),
                origin: Origin::TracePreserving { i, j },
            });
        }
    }
    out
}

/// Appends the hermitized trace-preservation constraints (`n²` real ones).
pub fn add_trace_preserving(sys: &ConstraintSystem, n: usize, k: usize) -> Result<ConstraintSystem> {
    if sys.p != n * k {
        return Err(Error::DimensionMismatch {
            context: "trace-preserving constraints",
            expected: (n * k, n * k),
            found: (sys.p, sys.p),
        });
    }
    let extra = hermitize(sys.p, &trace_preserving_raw(n, k))?;
    let mut constraints = sys.constraints.clone();
    constraints.extend(extra.constraints);
    ConstraintSystem::new(sys.p, constraints)
}

/// Default pivot threshold, relative to the largest squared norm seen.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-10;

/// Keeps a maximal real-linearly-independent subset of the constraints.
///
/// Constraints are orthonormalized greedily (modified Gram–Schmidt in the
/// trace inner product, applied twice). A constraint whose residual pivot
/// falls below `DEFAULT_PRUNE_TOL · max pivot` is dependent; it is dropped
/// if its target agrees with the same combination of retained targets to
/// within `tol·(1 + max|b|)`, and otherwise the system is infeasible.
pub fn prune_dependent(sys: &ConstraintSystem, tol: f64) -> Result<ConstraintSystem> {
    let kept = retained_indices(sys, tol)?;
    ConstraintSystem::new(sys.p, kept.into_iter().map(|i| sys.constraints[i].clone()).collect())
}

/// Indices of the constraints [`prune_dependent`] keeps, in order.
pub fn retained_indices(sys: &ConstraintSystem, tol: f64) -> Result<Vec<usize>> {
    let max_norm2 = sys
        .constraints
        .iter()
        .map(|c| c.c.frobenius_norm().powi(2))
        .fold(0.0, f64::max);
    let b_scale = 1.0 + sys.constraints.iter().map(|c| c.b.abs()).fold(0.0, f64::max);
    let mut basis: Vec<(HermMatrix, f64)> = Vec::new();
    let mut kept = Vec::new();
    for (index, c) in sys.constraints.iter().enumerate() {
        let mut r = c.c.clone();
        let mut beta = c.b;
        for _ in 0..2 {
            for (q, bq) in &basis {
                let coef = trace_pair_fast(q, &r);
                r.add_scaled(-coef, q);
                beta -= coef * bq;
            }
        }
        let pivot = r.frobenius_norm().powi(2);
        if pivot <= DEFAULT_PRUNE_TOL * max_norm2 {
            if beta.abs() > tol * b_scale {
                return Err(Error::Infeasible {
                    index,
                    reason: format!("dependent constraint disagrees with retained ones by {beta:e}"),
                });
            }
            continue;
        }
        let norm = pivot.sqrt();
        basis.push((r.scaled(1.0 / norm), beta / norm));
        kept.push(index);
    }
    Ok(kept)
}

/// Orthonormal basis `W` of the joint support `K^⊥` of a constraint system.
#[derive(Clone, Debug)]
pub struct SupportReduction {
    pub p: usize,
    /// `p × p′` with orthonormal columns.
    pub basis: CMatrix,
}

impl SupportReduction {
    pub fn reduced_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projector onto the joint support.
    pub fn projector(&self) -> HermMatrix {
        HermMatrix::symmetrized(&(&self.basis * self.basis.adjoint()))
    }
}

/// Restricts the system to the joint support of its constraint matrices.
///
/// With `K = ∩ ker C_ι` and `W` an orthonormal basis of `K^⊥`, every
/// `C_ι = P C_ι P` for `P = W W*`, so `tr(C_ι · W X′ W*) = tr(W* C_ι W · X′)`.
pub fn joint_support_reduce(sys: &ConstraintSystem, tol: f64) -> Result<(ConstraintSystem, SupportReduction)> {
    let mats: Vec<HermMatrix> = sys.constraints.iter().map(|c| c.c.clone()).collect();
    let (_, support) = kernel_and_support(sys.p, &mats, tol)?;
    let reduced = sys
        .constraints
        .iter()
        .map(|c| Constraint {
            c: c.c.compress(&support),
            b: c.b,
            tag: c.tag,
        })
        .collect();
    let reduction = SupportReduction {
        p: sys.p,
        basis: support,
    };
    Ok((ConstraintSystem::new(reduction.reduced_dim(), reduced)?, reduction))
}

/// `W X′ W*`
pub fn embed_solution(xred: &HermMatrix, red: &SupportReduction) -> Result<HermMatrix> {
    if xred.dim() != red.reduced_dim() {
        return Err(Error::DimensionMismatch {
            context: "embedding a reduced solution",
            expected: (red.reduced_dim(), red.reduced_dim()),
            found: (xred.dim(), xred.dim()),
        });
    }
    Ok(xred.expand(&red.basis))
}

/// True iff every off-diagonal entry of every `A_ν`, `B_ν` is at most `tol` in magnitude.
pub fn is_diagonal_instance(inst: &ProblemInstance, tol: f64) -> bool {
    let diag = |m: &CMatrix| {
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() <= tol))
    };
    inst.pairs.iter().all(|(a, b)| diag(a) && diag(b))
}

/// `assemble → hermitize → [trace preserving] → prune_dependent`.
pub fn build_system(inst: &ProblemInstance, tol: f64) -> Result<ConstraintSystem> {
    let sys = full_system(inst)?;
    prune_dependent(&sys, tol)
}

/// Hermitized system including trace-preserving constraints, before pruning.
pub fn full_system(inst: &ProblemInstance) -> Result<ConstraintSystem> {
    let mut sys = hermitize(inst.p(), &assemble(inst))?;
    if inst.trace_preserving {
        sys = add_trace_preserving(&sys, inst.n, inst.k)?;
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::{apply_choi, identity_choi, ChoiMatrix};
    use crate::linalg::testutil::*;
    use crate::linalg::ONE;
    use crate::pipeline::golden;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn assemble_worked_example() {
        let inst = golden::instance();
        let raw = assemble(&inst);
        assert_eq!(raw.len(), 8);
        let c111 = &raw[0];
        assert_eq!(c111.origin, Origin::Pair { nu: 0, m: 0, l: 0 });
        assert_eq!(c111.c, cmat(4, 4, &[2., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0.]));
        assert_eq!(c111.b, Complex64::new(4.0, 0.0));
        let c112 = &raw[1];
        assert_eq!(c112.origin, Origin::Pair { nu: 0, m: 0, l: 1 });
        assert_eq!(c112.c, cmat(4, 4, &[0., 0., 0., 0., 2., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 0.]));
        assert_eq!(c112.b, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unital_condition() {
        let inst = ProblemInstance::new(2, 2, vec![(CMatrix::identity(2, 2), CMatrix::identity(2, 2))], false).unwrap();
        for r in assemble(&inst) {
            let Origin::Pair { m, l, .. } = r.origin else { unreachable!() };
            assert_eq!(r.b, if m == l { ONE } else { Complex64::new(0.0, 0.0) });
        }
    }

    #[test]
    fn hermitize_passes_selfadjoint_through() {
        let c = cmat(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        let raw = vec![RawConstraint {
            c: c.clone(),
            b: Complex64::new(5.0, 0.0),
            origin: Origin::Pair { nu: 0, m: 0, l: 0 },
        }];
        let sys = hermitize(2, &raw).unwrap();
        assert_eq!(sys.len(), 1);
        assert_eq!(sys.constraints[0].c.as_matrix(), &c);
        assert_eq!(sys.constraints[0].b, 5.0);
        assert_eq!(sys.constraints[0].tag.part, Part::Selfadjoint);
    }

    #[test]
    fn hermitize_rejects_complex_target_on_selfadjoint() {
        let raw = vec![RawConstraint {
            c: CMatrix::identity(2, 2),
            b: Complex64::new(1.0, 1.0),
            origin: Origin::Pair { nu: 0, m: 0, l: 0 },
        }];
        assert!(matches!(hermitize(2, &raw), Err(Error::Infeasible { index: 0, .. })));
    }

    #[test]
    fn worked_example_has_three_couples_per_pair() {
        let inst = golden::instance();
        let sys = hermitize(4, &assemble(&inst)).unwrap();
        let mut couples: Vec<(usize, usize, usize)> = sys
            .constraints
            .iter()
            .map(|c| match c.tag.origin {
                Origin::Pair { nu, m, l } => (nu, m, l),
                _ => unreachable!(),
            })
            .collect();
        couples.dedup();
        assert_eq!(couples, vec![(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 0, 1), (1, 1, 1)]);
        // diagonal couples pass through, off-diagonal ones split in two
        assert_eq!(sys.len(), 8);
    }

    #[test]
    fn hermitized_sign_oracle() {
        // b := tr(C X) for random Hermitian X and random complex C
        let mut r = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let x = random_herm(&mut r, 4, 1.0);
            let raw: Vec<RawConstraint> = (0..3)
                .map(|nu| {
                    let c = random_cmatrix(&mut r, 4, 4);
                    let b = crate::linalg::trace_product(&c, x.as_matrix());
                    RawConstraint { c, b, origin: Origin::Pair { nu, m: 0, l: 1 } }
                })
                .collect();
            let sys = hermitize(4, &raw).unwrap();
            assert_eq!(sys.len(), 6);
            for res in sys.residuals(&x).unwrap() {
                assert!(res.abs() <= 1e-12, "residual {res}");
            }
        }
    }

    #[test]
    fn trace_preserving_small_cases() {
        let sys = add_trace_preserving(&ConstraintSystem::new(1, vec![]).unwrap(), 1, 1).unwrap();
        assert_eq!(sys.len(), 1);
        assert_eq!(sys.constraints[0].c, HermMatrix::identity(1));
        assert_eq!(sys.constraints[0].b, 1.0);

        let raw = trace_preserving_raw(2, 2);
        assert_eq!(raw.len(), 4);
        for r in &raw {
            let Origin::TracePreserving { i, j } = r.origin else { unreachable!() };
            assert_eq!(r.c, kron(&matrix_unit(2, 2, i, j).transpose(), &CMatrix::identity(2, 2)));
            assert_eq!(r.b.re, if i == j { 1.0 } else { 0.0 });
        }
        let sys = add_trace_preserving(&ConstraintSystem::new(4, vec![]).unwrap(), 2, 2).unwrap();
        assert_eq!(sys.len(), 4);
        let id = identity_choi(2).hermitian().unwrap();
        for res in sys.residuals(&id).unwrap() {
            assert!(res.abs() < 1e-15);
        }
    }

    #[test]
    fn prune_cases() {
        let c1 = HermMatrix::from_real_diagonal(&[1.0, 0.0]);
        let c2 = HermMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]);
        let dup = ConstraintSystem::from_pairs(2, vec![(c1.clone(), 1.0), (c1.clone(), 1.0)]).unwrap();
        assert_eq!(prune_dependent(&dup, 1e-9).unwrap().len(), 1);

        let bad = ConstraintSystem::from_pairs(2, vec![(c1.clone(), 1.0), (c1.clone(), 2.0)]).unwrap();
        assert!(matches!(prune_dependent(&bad, 1e-9), Err(Error::Infeasible { index: 1, .. })));

        let sum = c1.add(&c2);
        let sys = ConstraintSystem::from_pairs(2, vec![(c1, 0.5), (c2, 0.25), (sum, 0.75)]).unwrap();
        let pruned = prune_dependent(&sys, 1e-9).unwrap();
        assert_eq!(pruned.len(), 2);
        assert_eq!(pruned.constraints[1].b, 0.25);
        let g = pruned.gram();
        assert!(g.determinant().abs() > 1e-12);
    }

    #[test]
    fn support_reduction_cases() {
        let sys = ConstraintSystem::from_pairs(2, vec![(HermMatrix::from_real_diagonal(&[2.0, 0.0]), 1.0)]).unwrap();
        let (red, sr) = joint_support_reduce(&sys, 1e-10).unwrap();
        assert_eq!(sr.reduced_dim(), 1);
        assert_eq!(red.p, 1);
        assert!((red.constraints[0].c.get(0, 0).re - 2.0).abs() < 1e-14);

        let sys = ConstraintSystem::from_pairs(2, vec![(HermMatrix::identity(2), 1.0)]).unwrap();
        let (_, sr) = joint_support_reduce(&sys, 1e-10).unwrap();
        assert_eq!(sr.reduced_dim(), 2);
        assert!((sr.projector().as_matrix() - CMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn embed_cases() {
        let sr = SupportReduction { p: 3, basis: CMatrix::identity(3, 3) };
        let x = HermMatrix::from_real_diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(embed_solution(&x, &sr).unwrap(), x);

        let mut r = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(&mut r, 4);
        let sr = SupportReduction { p: 4, basis: u.columns(0, 2).into_owned() };
        let p = embed_solution(&HermMatrix::identity(2), &sr).unwrap();
        assert!((p.as_matrix() - sr.projector().as_matrix()).norm() < 1e-14);
        assert!(embed_solution(&HermMatrix::identity(3), &sr).is_err());
    }

    #[test]
    fn reduced_residuals_match_full() {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary(&mut r, 5);
        let w = u.columns(0, 3).into_owned();
        let pairs = (0..4).map(|_| (random_herm(&mut r, 3, 1.0).expand(&w), 1.0)).collect();
        let sys = ConstraintSystem::from_pairs(5, pairs).unwrap();
        let (red, sr) = joint_support_reduce(&sys, 1e-10).unwrap();
        assert_eq!(sr.reduced_dim(), 3);
        let xred = random_herm(&mut r, 3, 1.0);
        let full = embed_solution(&xred, &sr).unwrap();
        let a = red.residuals(&xred).unwrap();
        let b = sys.residuals(&full).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn diagonal_instance_detection() {
        let d = |v: &[f64]| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0))));
        let inst = ProblemInstance::new(2, 2, vec![(d(&[1.0, 2.0]), d(&[3.0, 4.0]))], false).unwrap();
        assert!(is_diagonal_instance(&inst, 1e-12));
        assert!(!is_diagonal_instance(&golden::instance(), 1e-12));
        // commuting but not diagonal
        let a = cmat(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let inst = ProblemInstance::new(2, 2, vec![(a.clone(), a)], false).unwrap();
        assert!(!is_diagonal_instance(&inst, 1e-12));
    }

    #[test]
    fn instance_validation() {
        let err = ProblemInstance::new(2, 2, vec![(CMatrix::zeros(3, 2), CMatrix::zeros(2, 2))], false).unwrap_err();
        assert!(err.to_string().contains("pair 0"));
        assert!(ProblemInstance::new(2, 2, vec![], false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hermitized_system_encodes_interpolation(seed in any::<u64>(), n in 1usize..4, k in 1usize..4, big_n in 1usize..4, herm in any::<bool>()) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let x = random_herm(&mut r, n * k, 1.0);
            let choi = ChoiMatrix::from_herm(n, k, x.clone()).unwrap();
            let pairs: Vec<(CMatrix, CMatrix)> = (0..big_n).map(|_| {
                let a = if herm { random_herm(&mut r, n, 1.0).into_matrix() } else { random_cmatrix(&mut r, n, n) };
                let b = apply_choi(&choi, &a).unwrap();
                (a, b)
            }).collect();
            let inst = ProblemInstance::new(n, k, pairs, false).unwrap();
            let sys = hermitize(n * k, &assemble(&inst)).unwrap();
            prop_assert!(sys.len() <= 2 * big_n * k * k);
            if herm {
                prop_assert!(sys.len() <= big_n * k * k);
            }
            for res in sys.residuals(&x).unwrap() {
                prop_assert!(res.abs() <= 1e-10);
            }
            let pruned = prune_dependent(&sys, 1e-9).unwrap();
            for res in pruned.residuals(&x).unwrap() {
                prop_assert!(res.abs() <= 1e-10);
            }
            // a Hermitian Y violating one interpolation entry violates a hermitized constraint
            let y = random_herm(&mut r, n * k, 1.0);
            let ychoi = ChoiMatrix::from_herm(n, k, y.clone()).unwrap();
            let mismatch = inst.pairs.iter().any(|(a, b)| (apply_choi(&ychoi, a).unwrap() - b).camax() > 1e-8);
            let violated = sys.residuals(&y).unwrap().iter().any(|v| v.abs() > 1e-10);
            prop_assert_eq!(mismatch, violated);
        }
    }
}
