//! One-dimensional quadrature building blocks: fixed Gauss-Legendre rules
//! and adaptive Simpson on linear and logarithmic axes.

/// Gauss-Legendre nodes/weights on [-1, 1].
pub const GAUSS2: [(f64, f64); 2] = [(-0.5773502691896257, 1.0), (0.5773502691896257, 1.0)];

pub const GAUSS4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.3478548451374538),
    (-0.33998104358485626, 0.6521451548625461),
    (0.33998104358485626, 0.6521451548625461),
    (0.8611363115940526, 0.3478548451374538),
];

/// 4-point Gauss-Legendre on [a, b].
pub fn gauss4<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in GAUSS4.iter() {
        acc += w * f(c + h * x);
    }
    acc * h
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

fn adaptive_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    converged: &mut bool,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || b - a < 1e-14 * (a.abs() + b.abs() + 1.0) {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *converged = false;
        return left + right + delta / 15.0;
    }
    adaptive_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, converged)
        + adaptive_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, converged)
}

/// Adaptive Simpson on [a, b]; `tol` is an absolute tolerance.
/// Returns (value, converged).
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: usize) -> (f64, bool) {
    if a == b {
        return (0.0, true);
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    let mut ok = true;
    let v = adaptive_rec(&f, a, fa, m, fm, b, fb, whole, tol, max_depth, &mut ok);
    (v, ok)
}

/// Adaptive integration of f over [a, b] with 0 < a < b using the substitution
/// rho = e^s, which tames power-law integrands over wide ranges.
pub fn adaptive_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_depth: usize) -> (f64, bool) {
    debug_assert!(a > 0.0 && b > a);
    adaptive(|s| { let rho = s.exp(); f(rho) * rho }, a.ln(), b.ln(), tol, max_depth)
}
