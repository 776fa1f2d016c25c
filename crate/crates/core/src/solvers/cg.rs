//! Polak–Ribière-plus nonlinear conjugate gradients for smooth convex objectives.

/// A smooth objective. `None` signals an evaluation outside the representable
/// range (e.g. an overflowing exponential); the line search treats it as a
/// step that went too far.
pub(crate) trait Objective {
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;
}

#[derive(Clone, Debug)]
pub(crate) struct CgSettings {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
    pub restart_period: usize,
    /// Iterates leaving the ball of this radius while still descending are
    /// reported as divergence.
    pub divergence_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CgStatus {
    Converged,
    Diverged,
    IterationLimit,
    /// The line search could not make progress along steepest descent.
    Stalled,
}

#[derive(Clone, Debug)]
pub(crate) struct CgResult {
    pub x: Vec<f64>,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub status: CgStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

struct Point {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

enum Search {
    Step(Point),
    Diverged(Point),
    Failed,
}

/// Function values this close to `f0` cannot be compared reliably.
fn indistinguishable(f: f64, f0: f64) -> bool {
    (f - f0).abs() <= 1e-12 * (1.0 + f0.abs())
}

fn line_search(obj: &dyn Objective, x: &[f64], f0: f64, d: &[f64], slope0: f64, alpha0: f64, s: &CgSettings) -> Search {
    let mut lo = Point {
        alpha: 0.0,
        x: x.to_vec(),
        f: f0,
        g: Vec::new(),
        slope: slope0,
    };
    // upper bracket: step and, when finite there, its slope
    let mut hi: Option<(f64, Option<f64>)> = None;
    let mut alpha = alpha0;
    for _ in 0..100 {
        let xa = axpy(x, alpha, d);
        let eval = obj.eval(&xa).filter(|(f, g)| f.is_finite() && g.iter().all(|v| v.is_finite()));
        match eval {
            None => hi = Some((alpha, None)),
            Some((f, g)) => {
                let slope = dot(&g, d);
                let decrease = f <= f0 + s.c1 * alpha * slope0 || indistinguishable(f, f0);
                let point = Point { alpha, x: xa, f, g, slope };
                if decrease && slope.abs() <= s.c2 * slope0.abs() {
                    return Search::Step(point);
                }
                if decrease && slope < 0.0 {
                    lo = point;
                } else {
                    hi = Some((alpha, Some(slope)));
                }
            }
        }
        alpha = match hi {
            None => {
                let next = 4.0 * alpha;
                if norm(&axpy(x, next, d)) > s.divergence_radius {
                    return if lo.alpha > 0.0 { Search::Diverged(lo) } else { Search::Failed };
                }
                next
            }
            Some((ha, hs)) => {
                let width = ha - lo.alpha;
                if width <= 1e-15 * ha.max(1e-300) {
                    break;
                }
                match hs {
                    Some(hs) if hs > lo.slope => {
                        let secant = lo.alpha - lo.slope * width / (hs - lo.slope);
                        secant.clamp(lo.alpha + 0.05 * width, ha - 0.05 * width)
                    }
                    _ => lo.alpha + 0.5 * width,
                }
            }
        };
    }
    if lo.alpha > 0.0 {
        Search::Step(lo)
    } else {
        Search::Failed
    }
}

pub(crate) fn minimize(obj: &dyn Objective, x0: Vec<f64>, s: &CgSettings) -> CgResult {
    let Some((mut f, mut g)) = obj.eval(&x0) else {
        return CgResult {
            grad: vec![f64::NAN; x0.len()],
            x: x0,
            iterations: 0,
            status: CgStatus::Stalled,
        };
    };
    let mut x = x0;
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut since_restart = 0usize;
    let mut prev_step: Option<(f64, f64)> = None; // (alpha, slope)
    let mut status = CgStatus::IterationLimit;
    let mut iterations = 0;
    while iterations < s.max_iters {
        if inf_norm(&g) <= s.grad_tol {
            status = CgStatus::Converged;
            break;
        }
        iterations += 1;
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            since_restart = 0;
        }
        let alpha0 = match prev_step {
            Some((a, prev_slope)) if since_restart > 0 => (a * prev_slope / slope).min(1e6 * a).max(1e-12),
            _ => 1.0 / inf_norm(&g).max(1.0),
        };
        let point = match line_search(obj, &x, f, &d, slope, alpha0, s) {
            Search::Step(p) => p,
            Search::Diverged(p) => {
                x = p.x;
                g = p.g;
                status = CgStatus::Diverged;
                break;
            }
            Search::Failed => {
                if since_restart == 0 {
                    status = CgStatus::Stalled;
                    break;
                }
                d = g.iter().map(|v| -v).collect();
                since_restart = 0;
                prev_step = None;
                continue;
            }
        };
        prev_step = Some((point.alpha, slope));
        let g_new = point.g;
        let gg = dot(&g, &g);
        since_restart += 1;
        let beta = if since_restart >= s.restart_period {
            since_restart = 0;
            0.0
        } else {
            let y: f64 = g_new.iter().zip(&g).map(|(a, b)| a * (a - b)).sum();
            (y / gg).max(0.0)
        };
        d = g_new.iter().zip(&d).map(|(gn, di)| -gn + beta * di).collect();
        x = point.x;
        f = point.f;
        g = g_new;
    }
    if status == CgStatus::IterationLimit && inf_norm(&g) <= s.grad_tol {
        status = CgStatus::Converged;
    }
    CgResult {
        x,
        grad: g,
        iterations,
        status,
    }
}
