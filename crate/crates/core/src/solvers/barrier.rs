//! Analytic center of the slice `{x : a(x) ≻ 0, Σ b_ι x_ι = λ}` with
//! `a(x) = a₀ + Σ x_ι C_ι`.
//!
//! At the minimizer of `−ln det a(x)` on the slice, stationarity reads
//! `tr(C_ι a(x)⁻¹) = μ b_ι`; when `μ > 0`, `X = μ⁻¹ a(x)⁻¹` is a strictly
//! positive solution of `tr(C_ι X) = b_ι`.

use nalgebra::{DMatrix, DVector};

use super::{SolveOutcome, SolveStatus};
use crate::constraints::ConstraintSystem;
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, HermMatrix};

#[derive(Clone, Debug)]
pub struct BarrierConfig {
    /// Strictly positive offset `a₀`.
    pub a0: HermMatrix,
    /// Level `λ` of `Σ b_ι x_ι`.
    pub lambda: f64,
    /// Stop when the KKT residual norm is below this.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Feasibility tolerance used to classify the recovered `X`.
    pub tol: f64,
}

impl BarrierConfig {
    /// `a₀ = I_p` with default tolerances.
    pub fn new(p: usize, lambda: f64) -> Self {
        Self {
            a0: HermMatrix::identity(p),
            lambda,
            newton_tol: 1e-11,
            max_newton: 200,
            tol: 1e-8,
        }
    }
}

struct Center {
    a_inv: HermMatrix,
    /// `t_ι = tr(C_ι a⁻¹)`
    t: Vec<f64>,
}

fn center_at(sys: &ConstraintSystem, a0: &HermMatrix, x: &[f64]) -> Result<Option<Center>> {
    let mut a = sys.combine(x);
    a.add_scaled(1.0, a0);
    let eig = herm_eig(&a)?;
    if eig.min() <= 0.0 {
        return Ok(None);
    }
    let a_inv = eig.map_spectrum(|l| 1.0 / l);
    let t = sys
        .constraints
        .iter()
        .map(|c| crate::linalg::trace_pair_fast(&c.c, &a_inv))
        .collect();
    Ok(Some(Center { a_inv, t }))
}

/// `H_ικ = tr(a⁻¹ C_ι a⁻¹ C_κ)`
fn hessian(sys: &ConstraintSystem, a_inv: &HermMatrix) -> DMatrix<f64> {
    let q = sys.len();
    let m: Vec<_> = sys.constraints.iter().map(|c| a_inv.as_matrix() * c.c.as_matrix()).collect();
    let mut h = DMatrix::zeros(q, q);
    for i in 0..q {
        for j in i..q {
            // tr(M_i M_j) without forming the product
            let v: f64 = m[i]
                .iter()
                .zip(m[j].transpose().iter())
                .map(|(x, y)| (x * y).re)
                .sum();
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

fn kkt_residual(t: &[f64], b: &[f64], nu: f64, x: &[f64], lambda: f64) -> f64 {
    let dual: f64 = t.iter().zip(b).map(|(ti, bi)| (nu * bi - ti).powi(2)).sum();
    let primal = b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>() - lambda;
    (dual + primal * primal).sqrt()
}

/// Equality-constrained infeasible-start Newton on `−ln det a(x)` from `x = 0`.
pub fn analytic_center(sys: &ConstraintSystem, cfg: &BarrierConfig) -> Result<SolveOutcome> {
    let q = sys.len();
    let p = sys.p;
    if cfg.a0.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "barrier offset a0",
            expected: (p, p),
            found: (cfg.a0.dim(), cfg.a0.dim()),
        });
    }
    if !cfg.lambda.is_finite() {
        return Err(Error::NonFinite("barrier level"));
    }
    let b = sys.targets();
    let b_norm2: f64 = b.iter().map(|v| v * v).sum();
    if b_norm2 == 0.0 {
        // Σ b x ≡ 0: only λ = 0 is attainable, and then X = 0 solves the system
        if cfg.lambda != 0.0 {
            return Err(Error::LevelOutOfRange { lambda: cfg.lambda });
        }
        return SolveOutcome::from_candidate(sys, HermMatrix::zeros(p), Some(vec![0.0; q]), 0, cfg.tol, SolveStatus::IterationLimit);
    }

    let mut x = vec![0.0; q];
    let mut nu = 0.0;
    let mut cur = center_at(sys, &cfg.a0, &x)?.ok_or(Error::NotPsd {
        min_eigenvalue: herm_eig(&cfg.a0)?.min(),
    })?;
    let mut res = kkt_residual(&cur.t, &b, nu, &x, cfg.lambda);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_newton {
        if res <= cfg.newton_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let h = hessian(sys, &cur.a_inv);
        let mut kkt = DMatrix::zeros(q + 1, q + 1);
        kkt.view_mut((0, 0), (q, q)).copy_from(&h);
        let mut rhs = DVector::zeros(q + 1);
        for i in 0..q {
            kkt[(i, q)] = b[i];
            kkt[(q, i)] = b[i];
            // gradient of −ln det a is −t
            rhs[i] = cur.t[i];
        }
        rhs[q] = cfg.lambda - b.iter().zip(&x).map(|(bi, xi)| bi * xi).sum::<f64>();
        let Some(sol) = kkt.lu().solve(&rhs) else {
            break;
        };
        let dx: Vec<f64> = sol.iter().take(q).copied().collect();
        let dnu = sol[q] - nu;

        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-14 {
            let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            let nun = nu + step * dnu;
            if let Some(c) = center_at(sys, &cfg.a0, &xn)? {
                let rn = kkt_residual(&c.t, &b, nun, &xn, cfg.lambda);
                if rn <= (1.0 - 0.01 * step) * res {
                    accepted = Some((xn, nun, c, rn));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, nun, c, rn)) = accepted else {
            break;
        };
        x = xn;
        nu = nun;
        cur = c;
        res = rn;
    }
    let primal = b.iter().zip(&x).map(|(bi, xi)| bi * xi).sum::<f64>() - cfg.lambda;
    if !converged && primal.abs() > cfg.newton_tol.max(1e-9) * (1.0 + cfg.lambda.abs()) {
        // never reached the slice inside the cone
        return Err(Error::LevelOutOfRange { lambda: cfg.lambda });
    }

    let mu = cur.t.iter().zip(&b).map(|(t, bi)| t * bi).sum::<f64>() / b_norm2;
    if mu <= 0.0 || !mu.is_finite() {
        return Ok(SolveOutcome {
            status: SolveStatus::IterationLimit,
            solution: None,
            coefficients: Some(x),
            residuals: vec![f64::NAN; q],
            min_eigenvalue: None,
            iterations,
        });
    }
    let tol = if converged { cfg.tol } else { -1.0 };
    SolveOutcome::from_candidate(sys, cur.a_inv.scaled(1.0 / mu), Some(x), iterations, tol, SolveStatus::IterationLimit)
}

/// Tries `λ = 2^j · Σ|b_ι|` for `j = −4..=8` and returns the first feasible center.
///
/// When no level succeeds, the last outcome is returned, or the last error if
/// every level failed outright.
pub fn analytic_center_sweep(sys: &ConstraintSystem, base: &BarrierConfig) -> Result<SolveOutcome> {
    let scale: f64 = sys.constraints.iter().map(|c| c.b.abs()).sum();
    if scale == 0.0 {
        return analytic_center(sys, &BarrierConfig { lambda: 0.0, ..base.clone() });
    }
    let mut last: Option<Result<SolveOutcome>> = None;
    let mut total_iters = 0;
    for j in -4..=8 {
        let cfg = BarrierConfig {
            lambda: scale * f64::powi(2.0, j),
            ..base.clone()
        };
        match analytic_center(sys, &cfg) {
            Ok(mut out) => {
                total_iters += out.iterations;
                out.iterations = total_iters;
                if out.is_feasible() {
                    return Ok(out);
                }
                last = Some(Ok(out));
            }
            Err(e) => {
                if !matches!(last, Some(Ok(_))) {
                    last = Some(Err(e));
                }
            }
        }
    }
    last.expect("sweep visits at least one level")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::linalg::{expm_herm, trace_pair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_trace_constraint() {
        let p = 3;
        let sys = ConstraintSystem::from_pairs(p, vec![(HermMatrix::identity(p), 1.0)]).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let out = analytic_center(&sys, &BarrierConfig::new(p, lambda)).unwrap();
            assert!(out.is_feasible());
            assert!((out.coefficients.as_ref().unwrap()[0] - lambda).abs() < 1e-9);
            let x = out.solution.unwrap();
            assert!(x.sub(&HermMatrix::identity(p).scaled(1.0 / p as f64)).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn zero_targets_reject_nonzero_level() {
        let sys = ConstraintSystem::from_pairs(2, vec![(HermMatrix::from_real_diagonal(&[1.0, -1.0]), 0.0)]).unwrap();
        assert!(matches!(
            analytic_center(&sys, &BarrierConfig::new(2, 1.0)),
            Err(Error::LevelOutOfRange { .. })
        ));
        let out = analytic_center(&sys, &BarrierConfig::new(2, 0.0)).unwrap();
        assert!(out.is_feasible());
    }

    #[test]
    fn unreachable_level_is_reported() {
        // a(x) = (1 + x) I ≻ 0 forces x > −1, so Σ b x = x cannot reach −5
        let sys = ConstraintSystem::from_pairs(2, vec![(HermMatrix::identity(2), 1.0)]).unwrap();
        assert!(matches!(
            analytic_center(&sys, &BarrierConfig::new(2, -5.0)),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn planted_sweep_is_feasible() {
        let mut r = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let xt = expm_herm(&random_herm(&mut r, 4, 0.5)).unwrap();
            let mut pairs = vec![(HermMatrix::identity(4), xt.trace())];
            for _ in 0..5 {
                let c = random_herm(&mut r, 4, 1.0);
                let b = trace_pair(&c, &xt).unwrap();
                pairs.push((c, b));
            }
            let sys = ConstraintSystem::from_pairs(4, pairs).unwrap();
            let out = analytic_center_sweep(&sys, &BarrierConfig::new(4, 0.0)).unwrap();
            assert!(out.is_feasible());
            assert!(out.max_residual() <= 1e-8);
            assert!(out.min_eigenvalue.unwrap() > 0.0);
        }
    }
}
