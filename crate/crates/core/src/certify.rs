//! Linear-functional certificates that a constraint system has no positive solution.
//!
//! If `S = Σ x_ι C_ι ⪰ 0` and `Σ b_ι x_ι < 0`, then every `X ⪰ 0` has
//! `Σ x_ι tr(C_ι X) = tr(S X) ≥ 0`, so `tr(C_ι X) = b_ι` is impossible.
//! With `S ⪰ 0`, `S ≠ 0` and `Σ b_ι x_ι ≤ 0`, no `X ≻ 0` exists
//! (`tr(S X) > 0` for those).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSystem;
use crate::error::Result;
use crate::linalg::{herm_eig, min_eigenvalue, trace_pair_fast, EigDecomp};
use crate::solvers::{solve_exp, ExpSolveConfig, SolveOutcome, SolveStatus};

pub const DEFAULT_VALIDATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    /// No `X ⪰ 0` solves the system.
    ExcludesPSD,
    /// No `X ≻ 0` solves the system.
    ExcludesPD,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Unit-norm coefficients `x`.
    pub coefficients: Vec<f64>,
    pub kind: CertificateKind,
    /// `Σ b_ι x_ι`
    pub value: f64,
    /// `λ_min(Σ x_ι C_ι)`
    pub min_eigenvalue: f64,
}

/// Outcome of checking a coefficient vector against both certificate kinds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validation {
    pub excludes_psd: bool,
    pub excludes_pd: bool,
    pub value: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl Validation {
    pub fn holds(&self, kind: CertificateKind) -> bool {
        match kind {
            CertificateKind::ExcludesPSD => self.excludes_psd,
            CertificateKind::ExcludesPD => self.excludes_pd,
        }
    }

    pub fn strongest(&self) -> Option<CertificateKind> {
        if self.excludes_psd {
            Some(CertificateKind::ExcludesPSD)
        } else if self.excludes_pd {
            Some(CertificateKind::ExcludesPD)
        } else {
            None
        }
    }
}

fn normalized(x: &[f64]) -> Option<Vec<f64>> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(x.iter().map(|v| v / norm).collect())
}

/// Checks `x / ‖x‖` against both certificate conditions at tolerance `tol`.
pub fn check_coefficients(x: &[f64], sys: &ConstraintSystem, tol: f64) -> Result<Validation> {
    let Some(x) = normalized(x).filter(|x| x.len() == sys.len()) else {
        return Ok(Validation {
            excludes_psd: false,
            excludes_pd: false,
            value: f64::NAN,
            min_eigenvalue: f64::NAN,
            max_eigenvalue: f64::NAN,
        });
    };
    let eig = herm_eig(&sys.combine(&x))?;
    let value: f64 = sys.constraints.iter().zip(&x).map(|(c, xi)| c.b * xi).sum();
    let cone = eig.min() >= -tol;
    Ok(Validation {
        excludes_psd: cone && value < -tol,
        excludes_pd: cone && eig.max() > tol && value <= tol,
        value,
        min_eigenvalue: eig.min(),
        max_eigenvalue: eig.max(),
    })
}

/// Re-checks a certificate from scratch; the stored value and eigenvalue are ignored.
pub fn validate(cert: &Certificate, sys: &ConstraintSystem, tol: f64) -> Result<bool> {
    Ok(check_coefficients(&cert.coefficients, sys, tol)?.holds(cert.kind))
}

impl Certificate {
    /// Builds the strongest certificate `x` supports, if any.
    pub fn from_coefficients(x: &[f64], sys: &ConstraintSystem, tol: f64) -> Result<Option<Self>> {
        let v = check_coefficients(x, sys, tol)?;
        Ok(v.strongest().map(|kind| Self {
            coefficients: normalized(x).expect("validated coefficients are nonzero"),
            kind,
            value: v.value,
            min_eigenvalue: v.min_eigenvalue,
        }))
    }
}

#[derive(Clone, Debug)]
pub struct SearchBudget {
    /// Random starting points in addition to the deterministic ones (descent fallback only).
    pub restarts: usize,
    /// Descent steps per penalty level.
    pub steps_per_level: usize,
    pub tol: f64,
    pub parallel: bool,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 8,
            steps_per_level: 100,
            tol: DEFAULT_VALIDATION_TOL,
            parallel: false,
        }
    }
}

const PENALTIES: [f64; 9] = [1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `v* C_ι v` for the lowest eigenvector `v`: the gradient of `λ_min`.
fn min_eig_gradient(sys: &ConstraintSystem, eig: &EigDecomp) -> Vec<f64> {
    let v = eig.eigenvectors.column(0);
    sys.constraints
        .iter()
        .map(|c| (v.adjoint() * c.c.as_matrix() * v)[(0, 0)].re)
        .collect()
}

struct Penalized<'a> {
    sys: &'a ConstraintSystem,
    b: Vec<f64>,
    rho: f64,
}

impl Penalized<'_> {
    /// `b·x + ρ‖(Σ x C)₋‖²_F`: the squared distance to the cone is smooth even
    /// where several eigenvalues cross zero together.
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let eig = herm_eig(&self.sys.combine(x))?;
        let mut f = dot(&self.b, x);
        let mut g = self.b.clone();
        if eig.min() < 0.0 {
            let neg = eig.map_spectrum(|l| l.min(0.0));
            f += self.rho * eig.eigenvalues.iter().map(|l| l.min(0.0).powi(2)).sum::<f64>();
            for (gi, c) in g.iter_mut().zip(&self.sys.constraints) {
                *gi += 2.0 * self.rho * trace_pair_fast(&c.c, &neg);
            }
        }
        Ok((f, g))
    }
}

/// Projected gradient descent on the unit sphere with a normalizing retraction.
fn sphere_descent(obj: &Penalized, mut x: Vec<f64>, steps: usize) -> Result<Vec<f64>> {
    let (mut f, mut g) = obj.eval(&x)?;
    let mut alpha = 1.0;
    for _ in 0..steps {
        let radial = dot(&g, &x);
        let gt: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| gi - radial * xi).collect();
        let gn2 = dot(&gt, &gt);
        if gn2.sqrt() <= 1e-14 * (1.0 + obj.rho) {
            break;
        }
        alpha *= 2.0;
        let mut accepted = false;
        while alpha > 1e-16 {
            let trial: Vec<f64> = x.iter().zip(&gt).map(|(xi, gi)| xi - alpha * gi).collect();
            let Some(trial) = normalized(&trial) else {
                alpha *= 0.5;
                continue;
            };
            let (ft, gtr) = obj.eval(&trial)?;
            if ft <= f - 1e-4 * alpha * gn2 {
                x = trial;
                f = ft;
                g = gtr;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(x)
}

/// A unit `z` with `Σ z_ι C_ι ≻ 0`, if the heuristic finds one.
///
/// Starts from the projection of the identity onto the span and ascends
/// `λ_min` by projected subgradient steps.
pub fn positive_element(sys: &ConstraintSystem) -> Result<Option<Vec<f64>>> {
    if sys.is_empty() {
        return Ok(None);
    }
    let q = sys.len();
    let traces: Vec<f64> = sys.constraints.iter().map(|c| c.c.trace()).collect();
    let gram = sys.gram();
    let start = nalgebra::Cholesky::new(gram)
        .map(|ch| ch.solve(&nalgebra::DVector::from_vec(traces.clone())).iter().copied().collect::<Vec<_>>())
        .unwrap_or(traces);
    let Some(mut z) = normalized(&start) else {
        return Ok(None);
    };
    let scale = sys.constraints.iter().map(|c| c.c.frobenius_norm()).fold(0.0, f64::max);
    let mut best = (min_eigenvalue(&sys.combine(&z))?, z.clone());
    for it in 0..200 {
        if best.0 > 0.0 {
            break;
        }
        let eig = herm_eig(&sys.combine(&z))?;
        let g = min_eig_gradient(sys, &eig);
        let radial = dot(&g, &z);
        let gt: Vec<f64> = g.iter().zip(&z).map(|(gi, zi)| gi - radial * zi).collect();
        let gn = dot(&gt, &gt).sqrt();
        if gn <= 1e-14 {
            break;
        }
        let step = 0.5 / ((it + 1) as f64).sqrt() / gn;
        z = match normalized(&z.iter().zip(&gt).map(|(zi, gi)| zi + step * gi).collect::<Vec<_>>()) {
            Some(z) => z,
            None => break,
        };
        let m = min_eigenvalue(&sys.combine(&z))?;
        if m > best.0 {
            best = (m, z.clone());
        }
    }
    debug_assert_eq!(best.1.len(), q);
    Ok((best.0 > 1e-12 * scale.max(1.0)).then_some(best.1))
}

/// Heuristic check that the span of the constraint matrices contains a strictly positive matrix.
pub fn span_contains_positive(sys: &ConstraintSystem) -> Result<bool> {
    Ok(positive_element(sys)?.is_some())
}

fn snapped(x: &[f64]) -> Vec<f64> {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    x.iter().map(|&v| if v.abs() < 1e-7 * m { 0.0 } else { v }).collect()
}

/// Turns a descent end point into a validated certificate when possible.
fn finalize(x: &[f64], sys: &ConstraintSystem, z: Option<&[f64]>, tol: f64) -> Result<Option<Certificate>> {
    let mut candidates = vec![snapped(x), x.to_vec()];
    if let Some(z) = z {
        // push the end point into the cone along the positive direction
        let lz = min_eigenvalue(&sys.combine(z))?;
        let lx = min_eigenvalue(&sys.combine(x))?;
        if lx < 0.0 && lz > 0.0 {
            let s = -lx / lz * (1.0 + 1e-9);
            candidates.push(x.iter().zip(z).map(|(a, b)| a + s * b).collect());
        }
    }
    let mut weak = None;
    for c in &candidates {
        match Certificate::from_coefficients(c, sys, tol)? {
            Some(cert) if cert.kind == CertificateKind::ExcludesPSD => return Ok(Some(cert)),
            Some(cert) if weak.is_none() => weak = Some(cert),
            _ => {}
        }
    }
    Ok(weak)
}

enum Interior {
    Found(Certificate),
    /// The optimum is provably above the validation tolerance.
    Excluded,
    Inconclusive,
}

/// Value and barrier terms of `t·b·x − ln det Y(x)`; `None` outside the cone.
fn barrier_value(sys: &ConstraintSystem, b: &[f64], t: f64, x: &[f64]) -> Result<Option<f64>> {
    let eig = herm_eig(&sys.combine(x))?;
    if eig.min() <= 0.0 {
        return Ok(None);
    }
    Ok(Some(t * dot(b, x) - eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>()))
}

/// Log-det barrier method for `min b·x` subject to `Σ x C ⪰ 0` and
/// `Σ x tr C = 1`, started from the strictly positive direction `z`.
///
/// The optimum is negative exactly when a PSD-excluding certificate exists
/// and zero when only a PD-excluding one does; the barrier gap `p/t` bounds
/// the distance to it, which is what allows `Excluded`.
fn interior_search(sys: &ConstraintSystem, z: &[f64], tol: f64) -> Result<Interior> {
    let q = sys.len();
    let p = sys.p as f64;
    let b = sys.targets();
    let a: Vec<f64> = sys.constraints.iter().map(|c| c.c.trace()).collect();
    let az = dot(&a, z);
    if az <= 0.0 {
        return Ok(Interior::Inconclusive);
    }
    let mut x: Vec<f64> = z.iter().map(|v| v / az).collect();
    let mut weak = None;
    let mut t = 1.0;
    for _ in 0..40 {
        for _ in 0..100 {
            let eig = herm_eig(&sys.combine(&x))?;
            if eig.min() <= 0.0 {
                return Ok(Interior::Inconclusive);
            }
            let yinv = eig.map_spectrum(|l| 1.0 / l).into_matrix();
            let g: Vec<_> = sys.constraints.iter().map(|c| &yinv * c.c.as_matrix()).collect();
            let mut kkt = DMatrix::<f64>::zeros(q + 1, q + 1);
            let mut rhs = DVector::<f64>::zeros(q + 1);
            for i in 0..q {
                rhs[i] = -(t * b[i] - g[i].trace().re);
                kkt[(i, q)] = a[i];
                kkt[(q, i)] = a[i];
                for j in 0..=i {
                    // tr(G_i G_j) without forming the product
                    let h: f64 = g[i].iter().zip(g[j].transpose().iter()).map(|(u, v)| (u * v).re).sum();
                    kkt[(i, j)] = h;
                    kkt[(j, i)] = h;
                }
            }
            let Some(sol) = kkt.lu().solve(&rhs) else {
                return Ok(Interior::Inconclusive);
            };
            let dx: Vec<f64> = sol.iter().take(q).copied().collect();
            let slope = -dot(&rhs.as_slice()[..q], &dx);
            if -slope / 2.0 <= 1e-12 {
                break;
            }
            let f0 = barrier_value(sys, &b, t, &x)?.expect("iterate is interior");
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(u, d)| u + step * d).collect();
                if let Some(f) = barrier_value(sys, &b, t, &trial)? {
                    if f <= f0 + 0.25 * step * slope {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let norm = dot(&x, &x).sqrt();
        match Certificate::from_coefficients(&x, sys, tol)? {
            Some(c) if c.kind == CertificateKind::ExcludesPSD => return Ok(Interior::Found(c)),
            Some(c) => weak = Some(c),
            None => {}
        }
        let gap = p / t;
        let lower = (dot(&b, &x) - gap) / norm;
        if lower > tol {
            return Ok(Interior::Excluded);
        }
        if lower >= -tol {
            // a PSD-excluding certificate is out of reach
            return Ok(match weak {
                Some(c) => Interior::Found(c),
                None if gap / norm <= 1e-3 * tol => Interior::Excluded,
                None => Interior::Inconclusive,
            });
        }
        t *= 10.0;
    }
    Ok(weak.map_or(Interior::Inconclusive, Interior::Found))
}

fn run_start(sys: &ConstraintSystem, x0: Vec<f64>, z: Option<&[f64]>, budget: &SearchBudget) -> Result<Option<Certificate>> {
    if let Some(c) = finalize(&x0, sys, z, budget.tol)?.filter(|c| c.kind == CertificateKind::ExcludesPSD) {
        return Ok(Some(c));
    }
    let b = sys.targets();
    let mut x = x0;
    for &rho in &PENALTIES {
        let obj = Penalized { sys, b: b.clone(), rho };
        x = sphere_descent(&obj, x, budget.steps_per_level)?;
    }
    finalize(&x, sys, z, budget.tol)
}

fn starting_points(sys: &ConstraintSystem, seed: u64, restarts: usize) -> Vec<Vec<f64>> {
    let q = sys.len();
    let mut starts = Vec::new();
    if let Some(x) = normalized(&sys.targets().iter().map(|v| -v).collect::<Vec<_>>()) {
        starts.push(x);
    }
    for i in 0..q.min(8) {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; q];
            e[i] = s;
            starts.push(e);
        }
    }
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let x: Vec<f64> = (0..q).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Some(x) = normalized(&x) {
            starts.push(x);
        }
    }
    starts
}

/// Looks for `x` with `Σ x_ι C_ι ⪰ 0` and small `Σ b_ι x_ι`.
///
/// When the span contains a positive matrix the question is settled by an
/// interior-point method on the normalized cone. Otherwise (or if that breaks
/// down numerically) penalized descent over the unit sphere runs from several
/// starting points, and `None` is not a proof of feasibility.
///
/// Only validated certificates are returned; an `ExcludesPSD` certificate is
/// preferred, and among equals the one from the earliest starting point.
pub fn search_certificate(sys: &ConstraintSystem, seed: u64, budget: &SearchBudget) -> Result<Option<Certificate>> {
    if sys.is_empty() {
        return Ok(None);
    }
    let z = positive_element(sys)?;
    if let Some(z) = &z {
        match interior_search(sys, z, budget.tol)? {
            Interior::Found(c) => return Ok(Some(c)),
            Interior::Excluded => return Ok(None),
            Interior::Inconclusive => {}
        }
    }
    let starts = starting_points(sys, seed, budget.restarts);
    let found: Vec<Option<Certificate>> = if budget.parallel {
        starts
            .into_par_iter()
            .map(|x0| run_start(sys, x0, z.as_deref(), budget))
            .collect::<Result<_>>()?
    } else {
        let mut out = Vec::new();
        for x0 in starts {
            let c = run_start(sys, x0, z.as_deref(), budget)?;
            let strong = matches!(&c, Some(c) if c.kind == CertificateKind::ExcludesPSD);
            out.push(c);
            if strong {
                break;
            }
        }
        out
    };
    let found: Vec<Certificate> = found.into_iter().flatten().collect();
    Ok(found
        .iter()
        .find(|c| c.kind == CertificateKind::ExcludesPSD)
        .or_else(|| found.first())
        .cloned())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Feasible,
    CertifiedInfeasible,
    CertifiedNoStrict,
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    pub outcome: SolveOutcome,
    pub certificate: Option<Certificate>,
    pub span_contains_positive: bool,
}

/// Relative size of the smallest eigenvalue below which a solution is
/// treated as lying on the boundary of the cone.
const BOUNDARY_RATIO: f64 = 1e-6;

/// Exponential-potential solve, corroborated by a certificate search when the
/// solve fails or ends on the boundary of the cone.
pub fn feasibility_report(
    sys: &ConstraintSystem,
    cfg: &ExpSolveConfig,
    budget: &SearchBudget,
    seed: u64,
) -> Result<FeasibilityReport> {
    let outcome = solve_exp(sys, cfg)?;
    finish_report(sys, outcome, budget, seed)
}

/// Classifies an existing solve outcome, searching for certificates as needed.
pub fn finish_report(sys: &ConstraintSystem, outcome: SolveOutcome, budget: &SearchBudget, seed: u64) -> Result<FeasibilityReport> {
    let span_contains_positive = span_contains_positive(sys)?;
    if outcome.status == SolveStatus::Feasible {
        let near_boundary = match &outcome.solution {
            Some(x) => {
                let eig = herm_eig(x)?;
                eig.min() <= BOUNDARY_RATIO * eig.max().abs()
            }
            None => false,
        };
        let mut certificate = None;
        if near_boundary {
            // a PSD witness exists, so only the weaker kind can be meaningful
            certificate = search_certificate(sys, seed, budget)?.and_then(|c| {
                let v = check_coefficients(&c.coefficients, sys, budget.tol).ok()?;
                v.excludes_pd.then(|| Certificate {
                    kind: CertificateKind::ExcludesPD,
                    ..c
                })
            });
        }
        let verdict = if certificate.is_some() {
            Verdict::CertifiedNoStrict
        } else {
            Verdict::Feasible
        };
        return Ok(FeasibilityReport {
            verdict,
            outcome,
            certificate,
            span_contains_positive,
        });
    }
    let certificate = search_certificate(sys, seed, budget)?;
    let verdict = match certificate.as_ref().map(|c| c.kind) {
        Some(CertificateKind::ExcludesPSD) => Verdict::CertifiedInfeasible,
        Some(CertificateKind::ExcludesPD) => Verdict::CertifiedNoStrict,
        None => Verdict::Undetermined,
    };
    Ok(FeasibilityReport {
        verdict,
        outcome,
        certificate,
        span_contains_positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{assemble, build_system, hermitize, ProblemInstance};
    use crate::linalg::testutil::*;
    use crate::linalg::{expm_herm, trace_pair, CMatrix, HermMatrix};
    use rand::Rng;

    fn e11() -> HermMatrix {
        HermMatrix::from_real_diagonal(&[1.0, 0.0])
    }

    fn planted(r: &mut impl Rng, p: usize, q: usize) -> ConstraintSystem {
        let x = expm_herm(&random_herm(r, p, 0.5)).unwrap();
        let pairs = (0..q)
            .map(|_| {
                let c = random_herm(r, p, 1.0);
                let b = trace_pair(&c, &x).unwrap();
                (c, b)
            })
            .collect();
        ConstraintSystem::from_pairs(p, pairs).unwrap()
    }

    fn negated_identity_instance() -> ProblemInstance {
        let i2 = CMatrix::identity(2, 2);
        ProblemInstance::new(2, 2, vec![(i2.clone(), -i2)], false).unwrap()
    }

    #[test]
    fn validate_hand_examples() {
        let sys = ConstraintSystem::from_pairs(2, vec![(e11(), -1.0)]).unwrap();
        let v = check_coefficients(&[1.0], &sys, 1e-9).unwrap();
        assert!(v.excludes_psd && v.excludes_pd);

        let sys = ConstraintSystem::from_pairs(2, vec![(e11(), 0.0)]).unwrap();
        let v = check_coefficients(&[1.0], &sys, 1e-9).unwrap();
        assert!(!v.excludes_psd && v.excludes_pd);
        // the opposite sign leaves the cone
        assert_eq!(check_coefficients(&[-1.0], &sys, 1e-9).unwrap().strongest(), None);
    }

    #[test]
    fn validation_is_scale_invariant() {
        let sys = ConstraintSystem::from_pairs(2, vec![(e11(), -1.0), (HermMatrix::from_real_diagonal(&[0.0, 1.0]), 2.0)]).unwrap();
        let x = [0.8, 0.1];
        let a = check_coefficients(&x, &sys, 1e-9).unwrap();
        let b = check_coefficients(&[8.0, 1.0], &sys, 1e-9).unwrap();
        assert_eq!(a.strongest(), b.strongest());
        assert!((a.value - b.value).abs() < 1e-14);
    }

    /// `φ = id` prescribed on two inputs: the identity Choi matrix is the only
    /// kind of solution and it has rank one.
    fn identity_boundary_system() -> ConstraintSystem {
        let i = crate::linalg::ONE * num_complex::Complex64::i();
        let a1 = CMatrix::from_row_slice(2, 2, &[1.0.into(), i, -i, 2.0.into()]);
        let sx = CMatrix::from_row_slice(2, 2, &[0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()]);
        let inst = ProblemInstance::new(2, 2, vec![(a1.clone(), a1), (sx.clone(), sx)], false).unwrap();
        build_system(&inst, crate::constraints::DEFAULT_PRUNE_TOL).unwrap()
    }

    #[test]
    fn boundary_system_has_pd_certificate_orthogonal_to_solution() {
        let sys = identity_boundary_system();
        let c = search_certificate(&sys, 0, &SearchBudget::default()).unwrap().unwrap();
        assert_eq!(c.kind, CertificateKind::ExcludesPD);
        assert!(validate(&c, &sys, 1e-9).unwrap());
        // complementarity with the known solution: Y·Φ_id = 0
        let y = sys.combine(&c.coefficients);
        let phi = crate::choi::identity_choi(2);
        assert!((y.as_matrix() * phi.matrix()).norm() < 1e-8);
    }

    #[test]
    fn interior_search_is_conclusive() {
        let sys = negated_identity_instance();
        let sys = build_system(&sys, crate::constraints::DEFAULT_PRUNE_TOL).unwrap();
        let z = positive_element(&sys).unwrap().unwrap();
        match interior_search(&sys, &z, 1e-9).unwrap() {
            Interior::Found(c) => assert_eq!(c.kind, CertificateKind::ExcludesPSD),
            _ => panic!("expected a certificate"),
        }

        let mut r = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let sys = planted(&mut r, 4, 6);
            let Some(z) = positive_element(&sys).unwrap() else {
                continue;
            };
            assert!(matches!(interior_search(&sys, &z, 1e-9).unwrap(), Interior::Excluded));
        }
    }

    #[test]
    fn search_finds_coordinate_certificate() {
        let sys = ConstraintSystem::from_pairs(2, vec![(e11(), -1.0)]).unwrap();
        let c = search_certificate(&sys, 0, &SearchBudget::default()).unwrap().unwrap();
        assert_eq!(c.kind, CertificateKind::ExcludesPSD);
        assert!((c.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(validate(&c, &sys, 1e-9).unwrap());
    }

    #[test]
    fn negated_identity_is_certified_infeasible() {
        let sys = build_system(&negated_identity_instance(), 1e-10).unwrap();
        let rep = feasibility_report(&sys, &ExpSolveConfig::default(), &SearchBudget::default(), 0).unwrap();
        assert_eq!(rep.verdict, Verdict::CertifiedInfeasible);
        let cert = rep.certificate.unwrap();
        assert!(validate(&cert, &sys, 1e-9).unwrap());
        assert!(rep.span_contains_positive);
    }

    #[test]
    fn hidden_infeasibility_found_from_random_starts() {
        // C₁ = diag(1,−1), C₂ = diag(0,1): the cone element C₁ + C₂ = E₁₁ pairs with b₁ + b₂ < 0
        let sys = ConstraintSystem::from_pairs(
            2,
            vec![
                (HermMatrix::from_real_diagonal(&[1.0, -1.0]), -2.0),
                (HermMatrix::from_real_diagonal(&[0.0, 1.0]), 1.0),
            ],
        )
        .unwrap();
        let c = search_certificate(&sys, 3, &SearchBudget::default()).unwrap().unwrap();
        assert_eq!(c.kind, CertificateKind::ExcludesPSD);
        assert!(validate(&c, &sys, 1e-9).unwrap());
    }

    #[test]
    fn boundary_singleton_is_certified_no_strict() {
        let sys = ConstraintSystem::from_pairs(2, vec![(e11(), 0.0)]).unwrap();
        let rep = feasibility_report(&sys, &ExpSolveConfig::default(), &SearchBudget::default(), 0).unwrap();
        assert_eq!(rep.verdict, Verdict::CertifiedNoStrict);
        assert_eq!(rep.certificate.as_ref().unwrap().kind, CertificateKind::ExcludesPD);
        // a PSD solution is still available
        if let Some(x) = &rep.outcome.solution {
            assert!(min_eigenvalue(x).unwrap() >= -1e-9);
            assert!(rep.outcome.max_residual() <= 1e-8);
        }
    }

    #[test]
    fn planted_systems_admit_no_certificate() {
        let mut r = ChaCha8Rng::seed_from_u64(21);
        for i in 0..5 {
            let sys = planted(&mut r, 3, 5);
            assert!(search_certificate(&sys, i, &SearchBudget::default()).unwrap().is_none());
            for _ in 0..50 {
                let x: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
                assert_eq!(check_coefficients(&x, &sys, 1e-9).unwrap().strongest(), None);
            }
        }
    }

    #[test]
    fn reference_system_has_no_psd_certificate() {
        let inst = crate::pipeline::golden::instance();
        let sys = hermitize(4, &assemble(&inst)).unwrap();
        let c = search_certificate(&sys, 1, &SearchBudget::default()).unwrap();
        assert!(c.is_none_or(|c| c.kind != CertificateKind::ExcludesPSD));
        let rep = feasibility_report(&sys, &ExpSolveConfig::default(), &SearchBudget::default(), 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Feasible);
    }

    #[test]
    fn parallel_search_matches_serial() {
        let sys = ConstraintSystem::from_pairs(
            2,
            vec![
                (HermMatrix::from_real_diagonal(&[1.0, -1.0]), -2.0),
                (HermMatrix::from_real_diagonal(&[0.0, 1.0]), 1.0),
            ],
        )
        .unwrap();
        let serial = search_certificate(&sys, 5, &SearchBudget::default()).unwrap();
        let parallel = search_certificate(&sys, 5, &SearchBudget { parallel: true, ..Default::default() }).unwrap();
        assert_eq!(serial, parallel);
    }
}
