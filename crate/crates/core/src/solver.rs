//! Solvers for the discrete problems: Jacobi-preconditioned conjugate
//! gradients for (mM + A) u = b, and descent minimization of the strictly
//! convex p-growth functional for the nonlinear equation.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

#[derive(Clone, Debug)]
pub struct LinearSolveReport {
    pub solution: GridFunction,
    pub iterations: usize,
    /// Final relative residual ||(mM+A)u - b|| / ||b||.
    pub residual: f64,
    pub wall_time: Duration,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Conjugate gradients with diagonal (Jacobi) preconditioning from the zero
/// start vector. The iterate sequence is deterministic: scalar reductions run
/// in a fixed order and the parallel matrix-vector product is accumulated
/// row-wise, so results are bit-identical for any worker count.
pub fn solve_linear(sys: &AssembledSystem, tol: f64, max_iter: usize) -> Result<LinearSolveReport> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::BadSolverTolerance(tol));
    }
    let start = Instant::now();
    let n = sys.b.len();
    let b_norm = dot(&sys.b, &sys.b).sqrt();
    let mut u = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(LinearSolveReport {
            solution: GridFunction { grid: sys.grid, values: u },
            iterations: 0,
            residual: 0.0,
            wall_time: start.elapsed(),
            converged: true,
        });
    }
    let diag: Vec<f64> = (0..n).map(|i| sys.a.get(i, i) + sys.m * sys.mass[i]).collect();
    let mut r = sys.b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = 1.0;
    let mut converged = false;
    while iterations < max_iter {
        sys.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        let alpha = rz / pap;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= tol {
            converged = true;
            break;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(LinearSolveReport {
        solution: GridFunction { grid: sys.grid, values: u },
        iterations,
        residual,
        wall_time: start.elapsed(),
        converged,
    })
}

/// The convex nonlinearity Phi(t) = c |t|^p with derivative c p |t|^{p-2} t.
#[derive(Clone, Copy, Debug)]
pub struct PhiSpec {
    pub p: f64,
    pub c: f64,
}

impl PhiSpec {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::BadPhiExponent(p));
        }
        if !(c > 0.0) {
            return Err(Error::BadPhiScale(c));
        }
        Ok(PhiSpec { p, c })
    }

    /// The quadratic calibration Phi(t) = t^2 / 2.
    pub fn quadratic() -> Self {
        PhiSpec { p: 2.0, c: 0.5 }
    }

    /// Growth constant: Phi is sandwiched by Upsilon^{-1} |t|^p and Upsilon |t|^p.
    pub fn upsilon(&self) -> f64 {
        self.c.max(1.0 / self.c) * self.p.max(1.0)
    }

    #[inline]
    pub fn phi(&self, t: f64) -> f64 {
        if self.p == 2.0 {
            self.c * t * t
        } else {
            self.c * t.abs().powf(self.p)
        }
    }

    /// Phi'(t), an odd function, continuous for p > 1.
    #[inline]
    pub fn dphi(&self, t: f64) -> f64 {
        if self.p == 2.0 {
            2.0 * self.c * t
        } else {
            self.c * self.p * t.abs().powf(self.p - 2.0) * t
        }
    }
}

/// Signed power |u|^{p-2} u of the lower-order term.
#[inline]
fn signed_power(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        u
    } else if u == 0.0 {
        0.0
    } else {
        u.abs().powf(p - 2.0) * u
    }
}

/// Discrete energy
///   J(u) = sum_{i<j} w_ij Phi(u_j - u_i) + sum_i e_i Phi(u_i)
///          + (m/p) sum_i M_ii |u_i|^p - b.u
/// with the pairwise weights w_ij = -A_ij taken from the assembled system.
/// For Phi(t) = t^2/2 this is exactly  u.Au/2 + (m/2) u.Mu - b.u.
pub fn functional_value(sys: &AssembledSystem, phi: &PhiSpec, u: &GridFunction) -> f64 {
    functional_value_scaled(sys, phi, u).0
}

/// Returns (J(u), sum of |term| magnitudes). The magnitude sum bounds the
/// floating-point resolution of J, which the line search needs to recognize
/// when objective differences stop being measurable.
pub(crate) fn functional_value_scaled(
    sys: &AssembledSystem,
    phi: &PhiSpec,
    u: &GridFunction,
) -> (f64, f64) {
    let n = sys.b.len();
    let vals = &u.values;
    // per-row partials summed in a fixed order: bit-identical results for
    // any worker count
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = sys.a.row(i);
            let ui = vals[i];
            let mut acc = 0.0;
            for j in (i + 1)..n {
                acc += -row[j] * phi.phi(vals[j] - ui);
            }
            acc
        })
        .collect();
    let pair: f64 = row_sums.iter().sum();
    let mut rest = 0.0;
    let mut scale = pair.abs();
    for i in 0..n {
        let ext = sys.exterior[i] * phi.phi(vals[i]);
        let mass = sys.m / phi.p * sys.mass[i] * vals[i].abs().powf(phi.p);
        let load = sys.b[i] * vals[i];
        rest += ext + mass - load;
        scale += ext + mass + load.abs();
    }
    (pair + rest, scale)
}

/// Gradient of the discrete energy:
///   g_i = sum_{j != i} (-A_ij) Phi'(u_i - u_j) + e_i Phi'(u_i)
///         + m M_ii |u_i|^{p-2} u_i - b_i.
/// For Phi(t) = t^2/2 this is exactly (A + mM) u - b.
pub fn functional_gradient(sys: &AssembledSystem, phi: &PhiSpec, u: &GridFunction) -> GridFunction {
    let n = sys.b.len();
    let vals = &u.values;
    let mut g = vec![0.0; n];
    g.par_iter_mut().enumerate().for_each(|(i, gi)| {
        let row = sys.a.row(i);
        let ui = vals[i];
        let mut acc = 0.0;
        for (j, aij) in row.iter().enumerate() {
            if j != i {
                acc += -aij * phi.dphi(ui - vals[j]);
            }
        }
        acc += sys.exterior[i] * phi.dphi(ui);
        acc += sys.m * sys.mass[i] * signed_power(ui, phi.p);
        acc -= sys.b[i];
        *gi = acc;
    });
    GridFunction { grid: sys.grid, values: g }
}

#[derive(Clone, Debug)]
pub struct LineSearchStats {
    pub total_backtracks: usize,
    pub smallest_step: f64,
    pub flat_steps: usize,
}

#[derive(Clone, Debug)]
pub struct NonlinearSolveReport {
    pub solution: GridFunction,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub objective: f64,
    pub line_search: LineSearchStats,
}

/// Minimize the strictly convex energy by gradient descent with Armijo
/// backtracking (initial step 1, shrink 1/2, sufficient decrease 1e-4).
///
/// Two escape hatches keep the iteration honest near its numerical limits:
/// near the kinks of Phi' for p < 2 the Armijo test may reject every step
/// even though a flat decrease exists, and such steps are accepted; and once
/// the predicted decrease falls below the floating-point resolution of J,
/// objective comparisons carry no information, so the iteration switches to
/// a safeguarded fixed step (half the smallest previously accepted step)
/// driven by the gradient norm alone. Both kinds are counted as flat steps.
pub fn minimize_functional(
    sys: &AssembledSystem,
    phi: &PhiSpec,
    start: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<NonlinearSolveReport> {
    let n = sys.b.len();
    let mut u = start.clone();
    let (mut j, mut j_scale) = functional_value_scaled(sys, phi, &u);
    let mut stats = LineSearchStats { total_backtracks: 0, smallest_step: 1.0, flat_steps: 0 };
    let mut iterations = 0;
    let mut s_safe = 1.0_f64;
    let mut noise_best = f64::INFINITY;
    loop {
        let g = functional_gradient(sys, phi, &u);
        let gnorm = dot(&g.values, &g.values).sqrt();
        if gnorm <= tol {
            return Ok(NonlinearSolveReport {
                solution: u,
                iterations,
                gradient_norm: gnorm,
                objective: j,
                line_search: stats,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NonlinearMaxIter(max_iter));
        }
        let g2 = gnorm * gnorm;
        let noise = 32.0 * f64::EPSILON * j_scale.max(f64::MIN_POSITIVE);
        let step_at = |s: f64| {
            let mut cand = vec![0.0; n];
            for i in 0..n {
                cand[i] = u.values[i] - s * g.values[i];
            }
            GridFunction { grid: sys.grid, values: cand }
        };
        if 0.5 * s_safe * g2 <= 8.0 * noise {
            // unresolvable regime: safeguarded gradient step
            let s = 0.5 * s_safe;
            let next = step_at(s);
            let (jn, sc) = functional_value_scaled(sys, phi, &next);
            stats.flat_steps += 1;
            stats.smallest_step = stats.smallest_step.min(s);
            if gnorm > 4.0 * noise_best {
                // diverging at this step size: be more conservative
                s_safe *= 0.5;
                if s_safe < 1e-14 {
                    return Err(Error::LineSearchFailed(s_safe));
                }
                noise_best = f64::INFINITY;
            }
            noise_best = noise_best.min(gnorm);
            u = next;
            j = j.min(jn);
            j_scale = sc;
            iterations += 1;
            continue;
        }
        noise_best = f64::INFINITY;
        let mut step = 1.0;
        let mut accepted = None;
        let mut best_flat: Option<(f64, f64)> = None;
        while step >= 1e-14 {
            let cand = step_at(step);
            let (jc, sc) = functional_value_scaled(sys, phi, &cand);
            if jc <= j - 1e-4 * step * g2 {
                accepted = Some((cand, jc, sc, step, true));
                break;
            }
            if jc < j && best_flat.as_ref().map_or(true, |(bj, _)| jc < *bj) {
                best_flat = Some((jc, step));
            }
            step *= 0.5;
            stats.total_backtracks += 1;
        }
        let (next, jn, sc, used, armijo) = match accepted {
            Some(x) => x,
            None => match best_flat {
                // flat step near a kink: strict decrease without the margin
                Some((jc, s)) => {
                    stats.flat_steps += 1;
                    let cand = step_at(s);
                    let (_, sc) = functional_value_scaled(sys, phi, &cand);
                    (cand, jc, sc, s, false)
                }
                None => return Err(Error::LineSearchFailed(step)),
            },
        };
        stats.smallest_step = stats.smallest_step.min(used);
        if armijo {
            s_safe = s_safe.min(used);
        }
        debug_assert!(jn <= j);
        u = next;
        j = jn;
        j_scale = sc;
        iterations += 1;
    }
}
