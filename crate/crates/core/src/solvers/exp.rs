//! Exponential potential `V(x) = tr exp(Σ x_ι C_ι + s·I) − Σ x_ι b_ι`.
//!
//! `V` is strictly convex for independent `C_ι`; its gradient is the residual
//! `tr(C_κ X) − b_κ` of `X = exp(Σ x_ι C_ι + s·I)`, so a critical point
//! yields a strictly positive solution. The potential is coercive exactly
//! when such a solution exists.
//!
//! The shift `s` only rescales `X` by `e^s` along the family; `s = −1` makes
//! the minimizer the maximum-entropy feasible point (the one maximizing
//! `−tr(X log X − X)`), `s = 0` is the unshifted potential.

use rayon::prelude::*;

use super::cg::{minimize, CgSettings, CgStatus, Objective};
use super::{SolveOutcome, SolveStatus};
use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::linalg::{expm_from_eig, herm_eig, trace_pair_fast, HermMatrix, MAX_EXP_ARG};

#[derive(Clone, Debug)]
pub struct ExpSolveConfig {
    /// Stop when `max_κ |∂V/∂x_κ| ≤ grad_tol`; this is the max residual.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Sufficient-decrease constant of the line search.
    pub c1: f64,
    /// Curvature constant of the line search.
    pub c2: f64,
    /// Restart with steepest descent every this many steps; `None` means `q`.
    pub restart_period: Option<usize>,
    /// Divergence is declared once `‖x‖₂ > factor · (1 + ‖x_start‖₂)`.
    pub divergence_factor: f64,
    /// Multiple of the identity added to the exponent.
    pub shift: f64,
    pub start: Option<Vec<f64>>,
    /// Evaluate gradient components in parallel.
    pub parallel: bool,
}

impl Default for ExpSolveConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iters: 20_000,
            c1: 1e-4,
            c2: 0.1,
            restart_period: None,
            divergence_factor: 1e4,
            shift: -1.0,
            start: None,
            parallel: false,
        }
    }
}

impl ExpSolveConfig {
    fn cg_settings(&self, q: usize, start_norm: f64) -> CgSettings {
        CgSettings {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            c1: self.c1,
            c2: self.c2,
            restart_period: self.restart_period.unwrap_or(q).max(1),
            divergence_radius: self.divergence_factor * (1.0 + start_norm),
        }
    }
}

/// The potential of a constraint system for a fixed exponent shift.
pub struct ExpPotential<'a> {
    sys: &'a ConstraintSystem,
    shift: f64,
    parallel: bool,
}

pub struct PotentialEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `exp(Σ x_ι C_ι + s·I)`
    pub matrix: HermMatrix,
}

impl<'a> ExpPotential<'a> {
    pub fn new(sys: &'a ConstraintSystem, shift: f64) -> Self {
        Self {
            sys,
            shift,
            parallel: false,
        }
    }

    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn exponent(&self, x: &[f64]) -> HermMatrix {
        let mut s = self.sys.combine(x);
        if self.shift != 0.0 {
            s.add_scaled(self.shift, &HermMatrix::identity(self.sys.p));
        }
        s
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<PotentialEval> {
        if x.len() != self.sys.len() {
            return Err(Error::DimensionMismatch {
                context: "potential argument",
                expected: (self.sys.len(), 1),
                found: (x.len(), 1),
            });
        }
        let eig = herm_eig(&self.exponent(x))?;
        let matrix = expm_from_eig(&eig)?;
        let trace: f64 = eig.eigenvalues.iter().map(|l| l.exp()).sum();
        let linear: f64 = self.sys.constraints.iter().zip(x).map(|(c, xi)| c.b * xi).sum();
        let component = |c: &crate::constraints::Constraint| trace_pair_fast(&c.c, &matrix) - c.b;
        let gradient = if self.parallel {
            self.sys.constraints.par_iter().map(component).collect()
        } else {
            self.sys.constraints.iter().map(component).collect()
        };
        Ok(PotentialEval {
            value: trace - linear,
            gradient,
            matrix,
        })
    }
}

impl Objective for ExpPotential<'_> {
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self.evaluate(x) {
            Ok(e) => Some((e.value, e.gradient)),
            Err(_) => None,
        }
    }
}

/// `V(x) = tr exp(Σ x_ι C_ι) − Σ x_ι b_ι` (unshifted).
pub fn potential(sys: &ConstraintSystem, x: &[f64]) -> Result<f64> {
    Ok(ExpPotential::new(sys, 0.0).evaluate(x)?.value)
}

/// `∂V/∂x_κ = tr(C_κ exp(Σ x_ι C_ι)) − b_κ` (unshifted).
pub fn gradient(sys: &ConstraintSystem, x: &[f64]) -> Result<Vec<f64>> {
    Ok(ExpPotential::new(sys, 0.0).evaluate(x)?.gradient)
}

fn start_point(cfg: &ExpSolveConfig, q: usize) -> Result<Vec<f64>> {
    match &cfg.start {
        Some(s) if s.len() != q => Err(Error::DimensionMismatch {
            context: "solver start point",
            expected: (q, 1),
            found: (s.len(), 1),
        }),
        Some(s) => Ok(s.clone()),
        None => Ok(vec![0.0; q]),
    }
}

/// Minimizes the potential by conjugate gradients and exponentiates the minimizer.
pub fn solve_exp(sys: &ConstraintSystem, cfg: &ExpSolveConfig) -> Result<SolveOutcome> {
    let q = sys.len();
    let x0 = start_point(cfg, q)?;
    let start_norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let pot = ExpPotential::new(sys, cfg.shift).parallel(cfg.parallel);
    let res = minimize(&pot, x0, &cfg.cg_settings(q, start_norm));
    match res.status {
        CgStatus::Diverged => Ok(SolveOutcome {
            status: SolveStatus::NoStrictlyPositiveSolution,
            solution: None,
            coefficients: Some(res.x),
            residuals: res.grad,
            min_eigenvalue: None,
            iterations: res.iterations,
        }),
        status => {
            let eval = match pot.evaluate(&res.x) {
                Ok(e) => e,
                Err(Error::ExpOverflow { .. }) => {
                    return Ok(SolveOutcome {
                        status: SolveStatus::IterationLimit,
                        solution: None,
                        coefficients: Some(res.x),
                        residuals: res.grad,
                        min_eigenvalue: None,
                        iterations: res.iterations,
                    })
                }
                Err(e) => return Err(e),
            };
            let tol = if status == CgStatus::Converged { cfg.grad_tol } else { -1.0 };
            SolveOutcome::from_candidate(sys, eval.matrix, Some(res.x), res.iterations, tol, SolveStatus::IterationLimit)
        }
    }
}

/// The potential restricted to diagonal matrices, where the exponential is entrywise.
struct DiagonalPotential {
    /// Diagonals of the retained constraint matrices.
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    shift: f64,
}

impl DiagonalPotential {
    fn exponent(&self, x: &[f64]) -> Vec<f64> {
        let p = self.rows.first().map_or(0, Vec::len);
        let mut s = vec![self.shift; p];
        for (row, &xi) in self.rows.iter().zip(x) {
            for (sr, dr) in s.iter_mut().zip(row) {
                *sr += xi * dr;
            }
        }
        s
    }
}

impl Objective for DiagonalPotential {
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let s = self.exponent(x);
        if s.iter().any(|&v| v > MAX_EXP_ARG) {
            return None;
        }
        let e: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        let linear: f64 = self.targets.iter().zip(x).map(|(b, xi)| b * xi).sum();
        let value = e.iter().sum::<f64>() - linear;
        let grad = self
            .rows
            .iter()
            .zip(&self.targets)
            .map(|(row, b)| row.iter().zip(&e).map(|(d, ei)| d * ei).sum::<f64>() - b)
            .collect();
        Some((value, grad))
    }
}

/// Exponential-potential solve over diagonal `X`.
///
/// Each constraint must either be diagonal, or have a vanishing diagonal and
/// a zero target (it then holds for every diagonal `X` and is dropped).
pub fn solve_diagonal(sys: &ConstraintSystem, cfg: &ExpSolveConfig) -> Result<SolveOutcome> {
    let p = sys.p;
    let mut kept: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    // Gram–Schmidt state over retained diagonals
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let max_norm = sys.constraints.iter().map(|c| c.c.frobenius_norm()).fold(0.0, f64::max);
    let b_scale = 1.0 + sys.constraints.iter().map(|c| c.b.abs()).fold(0.0, f64::max);
    for (index, c) in sys.constraints.iter().enumerate() {
        let scale = 1e-12 * (1.0 + c.c.frobenius_norm());
        let diag = c.c.real_diagonal();
        let diag_norm = diag.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !c.c.is_diagonal(scale) {
            if diag_norm <= scale && c.b.abs() <= cfg.grad_tol {
                continue;
            }
            return Err(Error::NotDiagonal(format!("constraint {index} mixes diagonal and off-diagonal entries")));
        }
        let mut r = diag.clone();
        let mut beta = c.b;
        for _ in 0..2 {
            for (qv, qb) in &basis {
                let coef: f64 = qv.iter().zip(&r).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(qv).for_each(|(ri, qi)| *ri -= coef * qi);
                beta -= coef * qb;
            }
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= 1e-10 * max_norm.max(f64::MIN_POSITIVE) {
            if beta.abs() > cfg.grad_tol.max(1e-9) * b_scale {
                return Err(Error::Infeasible {
                    index,
                    reason: "dependent diagonal constraint with inconsistent target".into(),
                });
            }
            continue;
        }
        basis.push((r.iter().map(|v| v / rn).collect(), beta / rn));
        kept.push((index, diag, c.b));
    }
    let pot = DiagonalPotential {
        rows: if kept.is_empty() { vec![] } else { kept.iter().map(|(_, d, _)| d.clone()).collect() },
        targets: kept.iter().map(|(_, _, b)| *b).collect(),
        shift: cfg.shift,
    };
    let q = kept.len();
    let x0 = match &cfg.start {
        Some(s) if s.len() == sys.len() => kept.iter().map(|(i, _, _)| s[*i]).collect(),
        _ => vec![0.0; q],
    };
    let start_norm = x0.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
    let res = minimize(&pot, x0, &cfg.cg_settings(q, start_norm));
    let mut coefficients = vec![0.0; sys.len()];
    for ((i, _, _), xi) in kept.iter().zip(&res.x) {
        coefficients[*i] = *xi;
    }
    let exponent = if q == 0 { vec![cfg.shift; p] } else { pot.exponent(&res.x) };
    match res.status {
        CgStatus::Diverged => Ok(SolveOutcome {
            status: SolveStatus::NoStrictlyPositiveSolution,
            solution: None,
            coefficients: Some(coefficients),
            residuals: vec![f64::NAN; sys.len()],
            min_eigenvalue: None,
            iterations: res.iterations,
        }),
        status => {
            if exponent.iter().any(|&v| v > MAX_EXP_ARG) {
                return Err(Error::ExpOverflow {
                    max_eigenvalue: exponent.iter().copied().fold(f64::MIN, f64::max),
                });
            }
            let x = HermMatrix::from_real_diagonal(&exponent.iter().map(|v| v.exp()).collect::<Vec<_>>());
            let tol = if status == CgStatus::Converged { cfg.grad_tol } else { -1.0 };
            SolveOutcome::from_candidate(sys, x, Some(coefficients), res.iterations, tol, SolveStatus::IterationLimit)
        }
    }
}
