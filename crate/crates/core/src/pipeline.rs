//! End-to-end solve: instance → real constraints → solver → Choi matrix and Kraus operators.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::SymmetricEigen;

use crate::certify::{
    finish_report, search_certificate, Certificate, CertificateKind, FeasibilityReport, SearchBudget, Verdict,
};
use crate::choi::{apply_choi, choi_to_kraus, kraus_to_choi, ChoiMatrix};
use crate::constraints::{
    embed_solution, full_system, is_diagonal_instance, joint_support_reduce, retained_indices, Constraint,
    ConstraintSystem, ProblemInstance, DEFAULT_PRUNE_TOL,
};
use crate::error::{Error, Result};
use crate::io::{matrix_to_json, ReportFile, SolverSection, Timing};
use crate::linalg::{herm_eig, min_eigenvalue, CMatrix, HermMatrix};
use crate::solvers::{
    analytic_center_sweep, project_affine, solve_diagonal, solve_exp, verify, BarrierConfig, ExpSolveConfig,
    SolveOutcome, SolveStatus,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exp,
    Barrier,
    /// The diagonal fast path for diagonal instances, otherwise `Exp`.
    Auto,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Self::Exp),
            "barrier" => Ok(Self::Barrier),
            "auto" => Ok(Self::Auto),
            other => Err(Error::Parse(format!("unknown method {other:?} (expected exp, barrier or auto)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exp => "exp",
            Self::Barrier => "barrier",
            Self::Auto => "auto",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub method: Method,
    /// Residual and positivity tolerance; also the gradient tolerance of the exponential solver.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub parallel: bool,
    /// Emit the Choi matrix and Kraus operators.
    pub emit_solution: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            tol: 1e-9,
            max_iters: 20_000,
            seed: 0,
            parallel: false,
            emit_solution: true,
        }
    }
}

impl SolveOptions {
    /// Fills unset command-line choices from an instance file's solver section.
    pub fn with_section(mut self, s: &SolverSection) -> Result<Self> {
        if let Some(m) = &s.method {
            self.method = m.parse()?;
        }
        if let Some(t) = s.tol {
            self.tol = t;
        }
        if let Some(m) = s.max_iters {
            self.max_iters = m;
        }
        if let Some(seed) = s.seed {
            self.seed = seed;
        }
        Ok(self)
    }

    fn exp_config(&self) -> ExpSolveConfig {
        ExpSolveConfig {
            grad_tol: self.tol,
            max_iters: self.max_iters,
            parallel: self.parallel,
            ..Default::default()
        }
    }

    fn budget(&self) -> SearchBudget {
        SearchBudget {
            parallel: self.parallel,
            ..Default::default()
        }
    }
}

/// A certificate for a linear system with no solution at all: a combination
/// `Σ x_ι C_ι = 0` with `Σ x_ι b_ι < 0`.
fn linear_inconsistency_certificate(sys: &ConstraintSystem, tol: f64) -> Result<Option<Certificate>> {
    let gram = sys.gram();
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b = sys.targets();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (j, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev.abs() > DEFAULT_PRUNE_TOL * top {
            continue;
        }
        let v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        let value: f64 = v.iter().zip(&b).map(|(a, c)| a * c).sum();
        if best.as_ref().is_none_or(|(bv, _)| value.abs() > bv.abs()) {
            best = Some((value, v));
        }
    }
    let Some((value, v)) = best else {
        return Ok(None);
    };
    let sign = if value > 0.0 { -1.0 } else { 1.0 };
    let x: Vec<f64> = v.iter().map(|a| sign * a).collect();
    Ok(Certificate::from_coefficients(&x, sys, tol)?.filter(|c| c.kind == CertificateKind::ExcludesPSD))
}

/// Maps certificate coefficients on a subsystem back to the full system.
fn lift_certificate(cert: &Certificate, kept: &[usize], full: &ConstraintSystem, tol: f64) -> Result<Option<Certificate>> {
    let mut x = vec![0.0; full.len()];
    for (&i, &c) in kept.iter().zip(&cert.coefficients) {
        x[i] = c;
    }
    Ok(Certificate::from_coefficients(&x, full, tol)?.map(|c| {
        if c.kind != cert.kind && cert.kind == CertificateKind::ExcludesPD {
            Certificate {
                kind: CertificateKind::ExcludesPD,
                ..c
            }
        } else {
            c
        }
    }))
}

/// Eigenvalues of a certificate's combination below this fraction of the
/// largest are taken to span its kernel.
const FACE_REL_TOL: f64 = 1e-6;

/// Solves on the face `{X ⪰ 0 : Y X = 0}` of a PD-excluding certificate
/// `Y = Σ x C ⪰ 0`, where every solution lives, descending to smaller faces
/// while new certificates turn up.
fn solve_on_face(sys: &ConstraintSystem, cert: &Certificate, opts: &SolveOptions) -> Result<Option<HermMatrix>> {
    let mut basis = CMatrix::identity(sys.p, sys.p);
    let mut current = sys.clone();
    let mut coefficients = cert.coefficients.clone();
    for _ in 0..sys.p {
        let eig = herm_eig(&current.combine(&coefficients))?;
        let kernel: Vec<usize> = (0..current.p)
            .filter(|&i| eig.eigenvalues[i] <= FACE_REL_TOL * eig.max())
            .collect();
        if kernel.is_empty() || kernel.len() == current.p {
            return Ok(None);
        }
        let w = eig.eigenvectors.select_columns(kernel.iter());
        basis *= &w;
        let compressed: Vec<Constraint> = current
            .constraints
            .iter()
            .map(|c| Constraint {
                c: c.c.compress(&w),
                ..c.clone()
            })
            .collect();
        let compressed = ConstraintSystem::new(kernel.len(), compressed)?;
        let kept = match retained_indices(&compressed, opts.tol) {
            Ok(kept) => kept,
            Err(Error::Infeasible { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        current = ConstraintSystem::new(compressed.p, kept.iter().map(|&i| compressed.constraints[i].clone()).collect())?;
        let outcome = solve_exp(&current, &opts.exp_config())?;
        if let (true, Some(x)) = (outcome.is_feasible(), outcome.solution) {
            return Ok(Some(x.expand(&basis)));
        }
        match search_certificate(&current, opts.seed, &opts.budget())? {
            Some(c) if c.kind == CertificateKind::ExcludesPD => coefficients = c.coefficients,
            _ => return Ok(None),
        }
    }
    Ok(None)
}

struct Solved {
    method: &'static str,
    report: FeasibilityReport,
    /// Solution on the pruned system's full space.
    solution: Option<HermMatrix>,
}

fn solve_pruned(inst: &ProblemInstance, pruned: &ConstraintSystem, opts: &SolveOptions) -> Result<Solved> {
    let budget = opts.budget();
    let diagonal = opts.method == Method::Auto && is_diagonal_instance(inst, 0.0);
    if diagonal {
        let outcome = solve_diagonal(pruned, &opts.exp_config())?;
        let report = finish_report(pruned, outcome, &budget, opts.seed)?;
        let solution = report.outcome.solution.clone();
        return Ok(Solved {
            method: "diagonal",
            report,
            solution,
        });
    }
    let (reduced, red) = joint_support_reduce(pruned, crate::linalg::DEFAULT_REL_TOL)?;
    let (method, outcome) = match opts.method {
        Method::Barrier => {
            let cfg = BarrierConfig {
                tol: opts.tol,
                max_newton: opts.max_iters.min(500),
                ..BarrierConfig::new(reduced.p, 0.0)
            };
            let outcome = match analytic_center_sweep(&reduced, &cfg) {
                Ok(o) => o,
                Err(Error::LevelOutOfRange { .. }) => SolveOutcome {
                    status: SolveStatus::IterationLimit,
                    solution: None,
                    coefficients: None,
                    residuals: Vec::new(),
                    min_eigenvalue: None,
                    iterations: 0,
                },
                Err(e) => return Err(e),
            };
            ("barrier", outcome)
        }
        Method::Exp | Method::Auto => ("exp", solve_exp(&reduced, &opts.exp_config())?),
    };
    let mut report = finish_report(&reduced, outcome, &budget, opts.seed)?;
    if report.verdict == Verdict::CertifiedNoStrict && !report.outcome.is_feasible() {
        let cert = report.certificate.as_ref().expect("certified verdicts carry a certificate");
        if let Some(x) = solve_on_face(&reduced, cert, opts)? {
            report.outcome = SolveOutcome::from_candidate(
                &reduced,
                x,
                None,
                report.outcome.iterations,
                opts.tol,
                SolveStatus::NoStrictlyPositiveSolution,
            )?;
        }
    }
    let solution = report
        .outcome
        .solution
        .as_ref()
        .map(|x| embed_solution(x, &red))
        .transpose()?;
    Ok(Solved {
        method,
        report,
        solution,
    })
}

/// Runs the whole pipeline and assembles a report.
///
/// `assemble → hermitize → [trace preserving] → prune → joint-support reduction
/// → solve → embed → affine projection → verify → Kraus extraction`.
pub fn run_solve(inst: &ProblemInstance, opts: &SolveOptions) -> Result<ReportFile> {
    let started = Instant::now();
    let full = full_system(inst)?;
    let mut report = ReportFile {
        tool_version: TOOL_VERSION.to_string(),
        status: Verdict::Undetermined,
        method: opts.method.to_string(),
        n: inst.n,
        k: inst.k,
        trace_preserving: inst.trace_preserving,
        choi: None,
        kraus: Vec::new(),
        residuals: Vec::new(),
        max_residual: None,
        min_eigenvalue: None,
        certificate: None,
        inconsistency: None,
        span_contains_positive: None,
        iterations: 0,
        timing: Timing { elapsed_seconds: 0.0 },
    };

    let kept = match retained_indices(&full, opts.tol) {
        Ok(kept) => kept,
        Err(Error::Infeasible { index, reason }) => {
            report.status = Verdict::CertifiedInfeasible;
            report.inconsistency = Some(format!("constraint {index}: {reason}"));
            report.certificate = linear_inconsistency_certificate(&full, crate::certify::DEFAULT_VALIDATION_TOL)?;
            report.timing.elapsed_seconds = started.elapsed().as_secs_f64();
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let pruned = ConstraintSystem::new(full.p, kept.iter().map(|&i| full.constraints[i].clone()).collect())?;

    let solved = solve_pruned(inst, &pruned, opts)?;
    report.method = solved.method.to_string();
    report.iterations = solved.report.outcome.iterations;
    report.span_contains_positive = Some(solved.report.span_contains_positive);
    report.status = solved.report.verdict;
    if let Some(cert) = &solved.report.certificate {
        report.certificate = lift_certificate(cert, &kept, &full, crate::certify::DEFAULT_VALIDATION_TOL)?;
        if report.certificate.is_none() {
            // the lifted functional no longer validates; do not claim more than we can show
            report.status = match report.status {
                Verdict::CertifiedNoStrict if solved.solution.is_some() => Verdict::Feasible,
                Verdict::CertifiedInfeasible | Verdict::CertifiedNoStrict => Verdict::Undetermined,
                other => other,
            };
        }
    }

    if let Some(x) = solved.solution {
        let projected = project_affine(&x, &pruned)?;
        let x = if min_eigenvalue(&projected)? >= -opts.tol { projected } else { x };
        let check = verify(&x, &full, opts.tol)?;
        report.residuals = check.residuals.clone();
        report.max_residual = Some(check.max_residual);
        report.min_eigenvalue = Some(check.min_eigenvalue);
        if !check.feasible && report.status == Verdict::Feasible {
            report.status = Verdict::Undetermined;
        } else if check.feasible && report.status == Verdict::Undetermined {
            // an unconverged iterate that projects onto a PSD solution
            report.status = Verdict::Feasible;
        }
        if check.feasible && opts.emit_solution {
            let choi = ChoiMatrix::from_herm(inst.n, inst.k, x)?;
            let kraus = choi_to_kraus(&choi, choi.rank_tolerance()?)?;
            report.choi = Some(matrix_to_json(choi.matrix()));
            report.kraus = kraus.elements.iter().map(matrix_to_json).collect();
        }
    }
    report.timing.elapsed_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Process exit code for a report: 0 solved, 2 certified infeasible, 3 undetermined.
pub fn exit_code(report: &ReportFile) -> i32 {
    match report.status {
        Verdict::Feasible => 0,
        Verdict::CertifiedNoStrict if report.choi.is_some() => 0,
        Verdict::CertifiedInfeasible => 2,
        Verdict::CertifiedNoStrict | Verdict::Undetermined => 3,
    }
}

pub fn run_apply(report: &ReportFile, a: &CMatrix) -> Result<CMatrix> {
    let choi = report
        .choi_matrix()?
        .ok_or_else(|| Error::InvalidInstance("report carries no Choi matrix".into()))?;
    apply_choi(&choi, a)
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyVerdict {
    pub checks: Vec<Check>,
}

impl VerifyVerdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Re-checks a report against its instance from scratch.
pub fn run_verify(report: &ReportFile, inst: &ProblemInstance, tol: f64) -> Result<VerifyVerdict> {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(Check { name, passed, detail });
    push(
        "dimensions",
        report.n == inst.n && report.k == inst.k,
        format!("report n={} k={}, instance n={} k={}", report.n, report.k, inst.n, inst.k),
    );
    if report.n != inst.n || report.k != inst.k {
        return Ok(VerifyVerdict { checks });
    }
    // a report solved with --trace-preserving is checked against those constraints too
    let inst = ProblemInstance {
        trace_preserving: inst.trace_preserving || report.trace_preserving,
        ..inst.clone()
    };
    let full = full_system(&inst)?;
    let choi = report.choi_matrix()?;
    if report.status == Verdict::Feasible {
        push("status", choi.is_some(), "feasible report must carry a Choi matrix".into());
    }
    if let Some(choi) = &choi {
        let x = choi.hermitian();
        let herm_ok = x.is_ok();
        push("hermitian", herm_ok, "Choi matrix must be Hermitian".into());
        if let Ok(x) = x {
            let v = verify(&x, &full, tol)?;
            push(
                "residuals",
                v.max_residual <= tol,
                format!("max residual {:e} (tolerance {tol:e})", v.max_residual),
            );
            push("psd", v.psd, format!("min eigenvalue {:e}", v.min_eigenvalue));
        }
        let round_trip = report.kraus_set().and_then(|ks| kraus_to_choi(&ks));
        match round_trip {
            Ok(c) => {
                let diff = (c.matrix() - choi.matrix()).norm();
                let scale = 1.0 + choi.matrix().norm();
                push(
                    "kraus round trip",
                    diff <= tol * scale,
                    format!("‖Σ w w* − Φ‖_F = {diff:e}"),
                );
            }
            Err(e) => push("kraus round trip", false, e.to_string()),
        }
    }
    if report.status == Verdict::CertifiedNoStrict {
        match &report.certificate {
            Some(cert) => {
                let ok = cert.kind == CertificateKind::ExcludesPD
                    && crate::certify::validate(cert, &full, crate::certify::DEFAULT_VALIDATION_TOL)?;
                push("certificate", ok, format!("{:?} certificate, value {:e}", cert.kind, cert.value));
            }
            None => push("certificate", false, "certified-no-strict report without certificate".into()),
        }
    }
    if report.status == Verdict::CertifiedInfeasible {
        match &report.certificate {
            Some(cert) => {
                let ok = crate::certify::validate(cert, &full, crate::certify::DEFAULT_VALIDATION_TOL)?;
                push("certificate", ok, format!("{:?} certificate, value {:e}", cert.kind, cert.value));
            }
            None => push(
                "certificate",
                report.inconsistency.is_some(),
                "certified-infeasible report without certificate or inconsistency".into(),
            ),
        }
    }
    Ok(VerifyVerdict { checks })
}

/// The 2×2 worked example: `A₁ = [[2,1],[1,0]]`, `A₂ = [[1,1],[1,2]]`,
/// `B₁ = [[4,0],[0,0]]`, `B₂ = [[3.5,1.5],[1.5,2.5]]`, and a published
/// approximate Choi matrix for it.
pub mod golden {
    use super::*;
    use num_complex::Complex64;

    fn real_matrix(n: usize, rows: &[f64]) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i * n + j], 0.0))
    }

    pub fn instance() -> ProblemInstance {
        let a1 = real_matrix(2, &[2.0, 1.0, 1.0, 0.0]);
        let a2 = real_matrix(2, &[1.0, 1.0, 1.0, 2.0]);
        let b1 = real_matrix(2, &[4.0, 0.0, 0.0, 0.0]);
        let b2 = real_matrix(2, &[3.5, 1.5, 1.5, 2.5]);
        ProblemInstance::new(2, 2, vec![(a1, b1), (a2, b2)], false).expect("reference instance is valid")
    }

    /// The published approximation `X̃₀` (ten significant digits).
    pub fn reference_choi() -> HermMatrix {
        HermMatrix::from_real_rows(
            4,
            &[
                1.549937761, -0.1694804138, 0.4499571618, 0.4047411695, //
                -0.1694804138, 0.1534277390, -0.06572393508, -0.1533566973, //
                0.4499571618, -0.06572393508, 0.5249880063, 0.6652436210, //
                0.4047411695, -0.1533566973, 0.6652436210, 1.326699194,
            ],
        )
    }

    /// `φ(A₁)[0,0]` under `X̃₀`, as printed alongside it.
    pub const REFERENCE_APPLY_00: f64 = 3.99978984;
}
