//! Feasibility solvers for `X ⪰ 0, tr(C_ι X) = b_ι`.

mod barrier;
pub(crate) mod cg;
mod exp;

pub use barrier::{analytic_center, analytic_center_sweep, BarrierConfig};
pub use exp::{gradient, potential, solve_diagonal, solve_exp, ExpPotential, ExpSolveConfig};

use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, HermMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Feasible,
    NoStrictlyPositiveSolution,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<HermMatrix>,
    /// Dual coefficients `x` (exponent or barrier variables).
    pub coefficients: Option<Vec<f64>>,
    /// Signed residuals `tr(C_ι X) − b_ι` of `solution`.
    pub residuals: Vec<f64>,
    pub min_eigenvalue: Option<f64>,
    pub iterations: usize,
}

impl SolveOutcome {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }

    /// Builds an outcome around a candidate `X`, marking it feasible when
    /// the residuals and the smallest eigenvalue are within `tol`.
    pub(crate) fn from_candidate(
        sys: &ConstraintSystem,
        x: HermMatrix,
        coefficients: Option<Vec<f64>>,
        iterations: usize,
        tol: f64,
        otherwise: SolveStatus,
    ) -> Result<Self> {
        let residuals = sys.residuals(&x)?;
        let min_eig = min_eigenvalue(&x)?;
        let max_res = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let status = if max_res <= tol && min_eig >= -tol {
            SolveStatus::Feasible
        } else {
            otherwise
        };
        Ok(Self {
            status,
            solution: Some(x),
            coefficients,
            residuals,
            min_eigenvalue: Some(min_eig),
            iterations,
        })
    }
}

/// Orthogonal (Frobenius) projection of `x` onto `{X : tr(C_ι X) = b_ι}`.
///
/// Requires linearly independent constraints; positivity of the result is
/// not guaranteed and should be re-checked with [`verify`].
pub fn project_affine(x: &HermMatrix, sys: &ConstraintSystem) -> Result<HermMatrix> {
    if sys.is_empty() {
        return Ok(x.clone());
    }
    let r = DVector::from_vec(sys.residuals(x)?);
    let gram = sys.gram();
    let scale = gram.diagonal().max();
    let chol = Cholesky::new(gram).ok_or(Error::SingularGram)?;
    // pivots at rounding level mean the constraints are dependent
    if chol.l_dirty().diagonal().iter().any(|d| d * d <= 1e-13 * scale) {
        return Err(Error::SingularGram);
    }
    let y = chol.solve(&r);
    let mut out = x.clone();
    for (c, yi) in sys.constraints.iter().zip(y.iter()) {
        out.add_scaled(-yi, &c.c);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub min_eigenvalue: f64,
    pub psd: bool,
    /// Residuals and positivity both within tolerance.
    pub feasible: bool,
}

pub fn verify(x: &HermMatrix, sys: &ConstraintSystem, tol: f64) -> Result<VerifyReport> {
    let residuals = sys.residuals(x)?;
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let min_eig = min_eigenvalue(x)?;
    let psd = min_eig >= -tol;
    Ok(VerifyReport {
        feasible: psd && max_residual <= tol,
        residuals,
        max_residual,
        min_eigenvalue: min_eig,
        psd,
    })
}
