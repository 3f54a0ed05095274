//! Oscillating coefficients: periodic and random, product and symmetric
//! structure, plus the effective (homogenized) coefficient of each.
//!
//! Random fields realize stationarity by a uniform global shift of a periodic
//! or lattice-i.i.d. template. A realization is a pure function of the seed,
//! so parallel sweeps over seeds are reproducible by construction.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::{pt1, Point};
use crate::rng::{cell_uniform, SplitMix64};

fn frac(t: f64) -> f64 {
    t - t.floor()
}

/// A 1-periodic scalar cell function with range inside [1/gamma, gamma].
#[derive(Clone, Debug, PartialEq)]
pub enum CellFunction {
    Constant(f64),
    /// Value `a` where frac(x_1) < theta, else `b`.
    TwoPhase { a: f64, b: f64, theta: f64 },
    /// (a+b)/2 + (b-a)/2 * cos(2 pi x_axis); range is exactly [min(a,b), max(a,b)].
    Cosine { a: f64, b: f64, axis: usize },
}

impl CellFunction {
    pub fn value(&self, p: Point) -> f64 {
        match self {
            CellFunction::Constant(c) => *c,
            CellFunction::TwoPhase { a, b, theta } => {
                if frac(p[0]) < *theta {
                    *a
                } else {
                    *b
                }
            }
            CellFunction::Cosine { a, b, axis } => {
                0.5 * (a + b) + 0.5 * (b - a) * (2.0 * std::f64::consts::PI * p[*axis]).cos()
            }
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            CellFunction::Constant(c) => (*c, *c),
            CellFunction::TwoPhase { a, b, .. } | CellFunction::Cosine { a, b, .. } => {
                (a.min(*b), a.max(*b))
            }
        }
    }

    /// Exact cell mean.
    pub fn mean(&self) -> f64 {
        match self {
            CellFunction::Constant(c) => *c,
            CellFunction::TwoPhase { a, b, theta } => theta * a + (1.0 - theta) * b,
            CellFunction::Cosine { a, b, .. } => 0.5 * (a + b),
        }
    }

    /// Axis-1 breakpoints inside [0, 1] where the function jumps.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            CellFunction::TwoPhase { theta, .. } => vec![0.0, *theta, 1.0],
            _ => vec![0.0, 1.0],
        }
    }

    fn validate(&self, gamma: f64) -> Result<()> {
        let (lo, hi) = self.range();
        if lo < 1.0 / gamma - 1e-12 || hi > gamma + 1e-12 || lo <= 0.0 {
            return Err(Error::RangeViolation { lo, hi, gamma });
        }
        if let CellFunction::TwoPhase { theta, .. } = self {
            if !(*theta > 0.0 && *theta < 1.0) {
                return Err(Error::Invalid(format!("two-phase fraction must lie in (0,1), got {theta}")));
            }
        }
        if let CellFunction::Cosine { axis, .. } = self {
            if *axis > 1 {
                return Err(Error::Invalid(format!("cosine axis must be 0 or 1, got {axis}")));
            }
        }
        Ok(())
    }
}

/// Mean of h(t) over one period along axis 1, splitting at the jump points of
/// every participating cell function. Each smooth panel is integrated by a
/// composite 4-point Gauss rule, so piecewise-constant factors are exact and
/// smooth factors converge far below the consistency cap.
fn periodic_mean_1d<F: Fn(f64) -> f64>(h: F, breakpoints: &[f64], q: usize) -> f64 {
    let mut pts: Vec<f64> = breakpoints.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = ((b - a) * q as f64).ceil().max(1.0) as usize;
        let step = (b - a) / n as f64;
        for i in 0..n {
            let lo = a + i as f64 * step;
            acc += crate::quad::gauss4(&h, lo, lo + step);
        }
    }
    acc
}

/// Symmetric four-argument coefficient templates Lambda(x, y, xi, eta).
/// The catalog entries are separable-plus-constant so the cell average has a
/// closed form; arbitrary maps are admitted but only Monte Carlo checked.
#[derive(Clone)]
pub enum SymmetricSpec {
    /// base + amplitude * cos(2 pi xi_1) cos(2 pi eta_1).
    CosineProduct { base: f64, amplitude: f64 },
    /// (phi(xi) + phi(eta)) / 2 for a cell function phi.
    MeanPair(CellFunction),
    /// Arbitrary symmetric map (x, y, xi, eta) -> value.
    Custom(Arc<dyn Fn(Point, Point, Point, Point) -> f64 + Send + Sync>),
}

impl SymmetricSpec {
    pub fn value(&self, x: Point, y: Point, xi: Point, eta: Point) -> f64 {
        match self {
            SymmetricSpec::CosineProduct { base, amplitude } => {
                // multiply the cosines first so the value is bitwise
                // symmetric under (xi, eta) exchange
                let cc = (2.0 * std::f64::consts::PI * xi[0]).cos()
                    * (2.0 * std::f64::consts::PI * eta[0]).cos();
                base + amplitude * cc
            }
            SymmetricSpec::MeanPair(phi) => 0.5 * (phi.value(xi) + phi.value(eta)),
            SymmetricSpec::Custom(f) => f(x, y, xi, eta),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            SymmetricSpec::CosineProduct { base, amplitude } => {
                (base - amplitude.abs(), base + amplitude.abs())
            }
            SymmetricSpec::MeanPair(phi) => phi.range(),
            SymmetricSpec::Custom(_) => (f64::NAN, f64::NAN),
        }
    }

    /// Cell average over (xi, eta) in the unit cells; closed form for catalog
    /// entries, Monte Carlo for custom maps.
    fn cell_average(&self, x: Point, y: Point, dim: usize, mc_samples: usize, seed: u64) -> (f64, Option<f64>) {
        match self {
            SymmetricSpec::CosineProduct { base, .. } => (*base, None),
            SymmetricSpec::MeanPair(phi) => (phi.mean(), None),
            SymmetricSpec::Custom(f) => {
                let n = mc_samples.max(1000);
                let mut rng = SplitMix64::keyed(seed, 77);
                let mut sum = 0.0;
                let mut sumsq = 0.0;
                for _ in 0..n {
                    let xi = [rng.next_f64(), if dim == 2 { rng.next_f64() } else { 0.0 }];
                    let eta = [rng.next_f64(), if dim == 2 { rng.next_f64() } else { 0.0 }];
                    let v = f(x, y, xi, eta);
                    sum += v;
                    sumsq += v * v;
                }
                let mean = sum / n as f64;
                let var = (sumsq / n as f64 - mean * mean).max(0.0);
                (mean, Some((var / n as f64).sqrt()))
            }
        }
    }

    /// Mean over the eta argument at fixed xi, used for far-field weights.
    pub fn eta_average(&self, x: Point, y: Point, xi: Point) -> f64 {
        match self {
            SymmetricSpec::CosineProduct { base, .. } => *base,
            SymmetricSpec::MeanPair(phi) => 0.5 * (phi.value(xi) + phi.mean()),
            SymmetricSpec::Custom(f) => {
                // midpoint rule over one period of eta_1 (custom maps are
                // assumed 1-periodic like everything else in the catalog)
                let q = 64;
                let mut acc = 0.0;
                for i in 0..q {
                    let t = (i as f64 + 0.5) / q as f64;
                    acc += f(x, y, xi, [t, 0.0]);
                }
                acc / q as f64
            }
        }
    }
}

/// Structural form of the oscillating coefficient.
#[derive(Clone)]
pub enum Structure {
    PeriodicProduct { lambda: CellFunction, mu: CellFunction },
    PeriodicSymmetric(SymmetricSpec),
    RandomProduct { lambda: CellFunction, mu: CellFunction },
    RandomSymmetric(SymmetricSpec),
    /// lambda is an i.i.d. two-valued field on unit cells (value `a` with
    /// probability `prob_a`, else `b`), shifted uniformly; mu is a shifted
    /// periodic template.
    RandomCheckerboard { a: f64, b: f64, prob_a: f64, mu: CellFunction },
}

impl Structure {
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            Structure::RandomProduct { .. }
                | Structure::RandomSymmetric(_)
                | Structure::RandomCheckerboard { .. }
        )
    }

    pub fn is_product(&self) -> bool {
        matches!(
            self,
            Structure::PeriodicProduct { .. }
                | Structure::RandomProduct { .. }
                | Structure::RandomCheckerboard { .. }
        )
    }
}

/// A drawn random realization: the global shift, with lattice cell values
/// derived lazily from the seed.
#[derive(Clone, Copy, Debug)]
pub struct Realization {
    pub seed: u64,
    pub shift: Point,
}

/// The coefficient of one (epsilon, realization) instance.
#[derive(Clone)]
pub struct CoefficientField {
    pub structure: Structure,
    pub gamma: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub realization: Option<Realization>,
}

impl CoefficientField {
    pub fn new(dim: usize, structure: Structure, gamma: f64, epsilon: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if gamma < 1.0 {
            return Err(Error::GammaTooSmall(gamma));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        match &structure {
            Structure::PeriodicProduct { lambda, mu } | Structure::RandomProduct { lambda, mu } => {
                lambda.validate(gamma)?;
                mu.validate(gamma)?;
            }
            Structure::PeriodicSymmetric(s) | Structure::RandomSymmetric(s) => {
                let (lo, hi) = s.range();
                if lo.is_nan() {
                    // custom maps are trusted; out-of-range values surface in the invariant tests
                } else if lo < 1.0 / gamma - 1e-12 || hi > gamma + 1e-12 || lo <= 0.0 {
                    return Err(Error::RangeViolation { lo, hi, gamma });
                }
            }
            Structure::RandomCheckerboard { a, b, prob_a, mu } => {
                mu.validate(gamma)?;
                for v in [*a, *b] {
                    if v < 1.0 / gamma - 1e-12 || v > gamma + 1e-12 || v <= 0.0 {
                        return Err(Error::RangeViolation { lo: a.min(*b), hi: a.max(*b), gamma });
                    }
                }
                if !(*prob_a > 0.0 && *prob_a < 1.0) {
                    return Err(Error::Invalid(format!("checkerboard probability must be in (0,1), got {prob_a}")));
                }
            }
        }
        Ok(CoefficientField { structure, gamma, epsilon, dim, realization: None })
    }

    /// Same field at a different oscillation scale (realization cleared for
    /// random structures, preserved for periodic ones where it is absent).
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut c = self.clone();
        c.epsilon = epsilon;
        c
    }

    fn require_realization(&self) -> Result<Realization> {
        if !self.structure.is_random() {
            // periodic fields have a trivial zero shift
            return Ok(Realization { seed: 0, shift: [0.0, 0.0] });
        }
        self.realization.ok_or(Error::RealizationMissing)
    }

    /// Draw the realization for `seed`: a uniform global shift, plus (for the
    /// checkerboard) i.i.d. cell values keyed lazily by (seed, cell index).
    pub fn draw_realization(&self, seed: u64) -> Result<Self> {
        if !self.structure.is_random() {
            return Err(Error::NotRandom);
        }
        let mut rng = SplitMix64::keyed(seed, 1);
        let shift = match self.dim {
            1 => pt1(rng.next_f64()),
            _ => [rng.next_f64(), rng.next_f64()],
        };
        let mut c = self.clone();
        c.realization = Some(Realization { seed, shift });
        Ok(c)
    }

    fn lattice_value(&self, seed: u64, t: Point) -> f64 {
        if let Structure::RandomCheckerboard { a, b, prob_a, .. } = &self.structure {
            let ix = t[0].floor() as i64;
            let iy = if self.dim == 2 { t[1].floor() as i64 } else { 0 };
            if cell_uniform(seed, ix, iy) < *prob_a {
                *a
            } else {
                *b
            }
        } else {
            unreachable!("lattice_value is only called for checkerboard fields")
        }
    }

    fn shifted(&self, p: Point, r: Realization) -> Point {
        [p[0] / self.epsilon + r.shift[0], p[1] / self.epsilon + r.shift[1]]
    }

    /// Lambda^eps(x, y).
    pub fn eval(&self, x: Point, y: Point) -> Result<f64> {
        let r = self.require_realization()?;
        let xt = self.shifted(x, r);
        let yt = self.shifted(y, r);
        Ok(match &self.structure {
            Structure::PeriodicProduct { lambda, mu } | Structure::RandomProduct { lambda, mu } => {
                lambda.value(xt) * mu.value(yt)
            }
            Structure::PeriodicSymmetric(s) | Structure::RandomSymmetric(s) => s.value(x, y, xt, yt),
            Structure::RandomCheckerboard { mu, .. } => {
                self.lattice_value(r.seed, xt) * mu.value(yt)
            }
        })
    }

    /// The weight nu^eps = mu^eps / lambda^eps of the product weak form.
    pub fn eval_nu(&self, x: Point) -> Result<f64> {
        let r = self.require_realization()?;
        let xt = self.shifted(x, r);
        match &self.structure {
            Structure::PeriodicProduct { lambda, mu } | Structure::RandomProduct { lambda, mu } => {
                Ok(mu.value(xt) / lambda.value(xt))
            }
            Structure::RandomCheckerboard { mu, .. } => {
                Ok(mu.value(xt) / self.lattice_value(r.seed, xt))
            }
            _ => Err(Error::NotProductStructure),
        }
    }

    /// mu^eps(x) alone (used by the product weak-form weight).
    pub fn eval_mu(&self, x: Point) -> Result<f64> {
        let r = self.require_realization()?;
        let xt = self.shifted(x, r);
        match &self.structure {
            Structure::PeriodicProduct { mu, .. }
            | Structure::RandomProduct { mu, .. }
            | Structure::RandomCheckerboard { mu, .. } => Ok(mu.value(xt)),
            _ => Err(Error::NotProductStructure),
        }
    }

    /// Mean of nu over the oscillation (exact): <mu/lambda> for periodic
    /// product, E[mu/lambda] for the random structures, 1 for symmetric.
    pub fn mean_nu(&self, quad: &EffectiveQuad) -> Result<f64> {
        match &self.structure {
            Structure::PeriodicProduct { lambda, mu } | Structure::RandomProduct { lambda, mu } => {
                mean_ratio(mu, lambda, quad.cell_resolution)
            }
            Structure::RandomCheckerboard { a, b, prob_a, mu } => {
                Ok(mu.mean() * (prob_a / a + (1.0 - prob_a) / b))
            }
            _ => Ok(1.0),
        }
    }

    /// Mean of mu over the oscillation (exact: every catalog entry has an
    /// analytic cell mean).
    pub fn mean_mu(&self, _quad: &EffectiveQuad) -> Result<f64> {
        match &self.structure {
            Structure::PeriodicProduct { mu, .. }
            | Structure::RandomProduct { mu, .. }
            | Structure::RandomCheckerboard { mu, .. } => Ok(mu.mean()),
            _ => Err(Error::NotProductStructure),
        }
    }

    /// Jump locations of nu = mu/lambda along one axis inside [lo, hi], in
    /// physical coordinates. The realization shift moves jumps off the cell
    /// boundaries, so exact mass integration must split at them.
    pub fn nu_jumps_on_axis(&self, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
        let mut offsets: Vec<f64> = Vec::new();
        let mut push_cellfn = |offsets: &mut Vec<f64>, f: &CellFunction| {
            // TwoPhase jumps along the first axis only
            if axis == 0 {
                if let CellFunction::TwoPhase { theta, .. } = f {
                    offsets.push(0.0);
                    offsets.push(*theta);
                }
            }
        };
        match &self.structure {
            Structure::PeriodicProduct { lambda, mu } | Structure::RandomProduct { lambda, mu } => {
                push_cellfn(&mut offsets, lambda);
                push_cellfn(&mut offsets, mu);
            }
            Structure::RandomCheckerboard { mu, .. } => {
                // lattice cell boundaries jump on every axis
                offsets.push(0.0);
                push_cellfn(&mut offsets, mu);
            }
            _ => {}
        }
        if offsets.is_empty() {
            return Vec::new();
        }
        let shift = self.realization.map(|r| r.shift[axis]).unwrap_or(0.0);
        let mut out = Vec::new();
        for beta in offsets {
            // x = eps (k + beta - shift) for integer k
            let k_lo = (lo / self.epsilon + shift - beta).ceil() as i64;
            let k_hi = (hi / self.epsilon + shift - beta).floor() as i64;
            for k in k_lo..=k_hi {
                let x = self.epsilon * (k as f64 + beta - shift);
                if x > lo && x < hi {
                    out.push(x);
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

/// Quadrature / Monte Carlo settings for effective-coefficient computation.
#[derive(Clone, Copy, Debug)]
pub struct EffectiveQuad {
    /// Midpoint cells per axis (refined once for the Richardson check).
    pub cell_resolution: usize,
    pub mc_samples: usize,
    pub mc_stderr_cap: f64,
    pub mc_seed: u64,
}

impl Default for EffectiveQuad {
    fn default() -> Self {
        EffectiveQuad { cell_resolution: 64, mc_samples: 4096, mc_stderr_cap: 0.1, mc_seed: 0x0eff }
    }
}

/// The homogenized coefficient.
#[derive(Clone)]
pub enum EffectiveKind {
    ConstantScalar(f64),
    TwoPointMap(Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>),
}

#[derive(Clone)]
pub struct EffectiveCoefficient {
    pub kind: EffectiveKind,
    pub mc_stderr: Option<f64>,
}

impl EffectiveCoefficient {
    pub fn constant(v: f64) -> Self {
        EffectiveCoefficient { kind: EffectiveKind::ConstantScalar(v), mc_stderr: None }
    }

    pub fn value_at(&self, x: Point, y: Point) -> f64 {
        match &self.kind {
            EffectiveKind::ConstantScalar(v) => *v,
            EffectiveKind::TwoPointMap(f) => f(x, y),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match &self.kind {
            EffectiveKind::ConstantScalar(v) => Some(*v),
            EffectiveKind::TwoPointMap(_) => None,
        }
    }
}

/// Cell mean with one refinement and a Richardson consistency check.
fn checked_mean<F: Fn(f64) -> f64 + Copy>(h: F, breakpoints: &[f64], q: usize) -> Result<f64> {
    let coarse = periodic_mean_1d(h, breakpoints, q);
    let fine = periodic_mean_1d(h, breakpoints, 2 * q);
    let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
    if rel > 1e-8 {
        return Err(Error::QuadratureUnderResolved { rel, cap: 1e-8 });
    }
    Ok(fine)
}

/// <mu / lambda> over one cell: closed form whenever one factor is constant
/// or both are piecewise constant, quadrature with a consistency check for
/// the genuinely mixed smooth cases.
fn mean_ratio(mu: &CellFunction, lambda: &CellFunction, q: usize) -> Result<f64> {
    match (mu, lambda) {
        (_, CellFunction::Constant(a)) => Ok(mu.mean() / a),
        (CellFunction::Constant(c), CellFunction::TwoPhase { a, b, theta }) => {
            Ok(c * (theta / a + (1.0 - theta) / b))
        }
        (
            CellFunction::TwoPhase { a: ma, b: mb, theta: mt },
            CellFunction::TwoPhase { a: la, b: lb, theta: lt },
        ) => {
            let mut pts = [0.0, *mt, *lt, 1.0];
            pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut acc = 0.0;
            for w in pts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                let t = 0.5 * (w[0] + w[1]);
                let mv = if t < *mt { ma } else { mb };
                let lv = if t < *lt { la } else { lb };
                acc += (w[1] - w[0]) * mv / lv;
            }
            Ok(acc)
        }
        _ => {
            let mut bp = mu.breakpoints();
            bp.extend(lambda.breakpoints());
            checked_mean(|t| mu.value(pt1(t)) / lambda.value(pt1(t)), &bp, q)
        }
    }
}

/// Compute the effective coefficient of a field.
///
/// Product structures give the scalar <mu>^2 / <mu/lambda> (expectations for
/// the random variants; the two-valued checkerboard law is summed exactly).
/// Symmetric structures give the (xi, eta) cell average as a two-point map;
/// the random-symmetric ensemble average coincides with the cell average for
/// shifted templates and is closed-form for the catalog, while custom maps
/// fall back to Monte Carlo with a reported standard error.
pub fn effective_coefficient(c: &CoefficientField, quad: &EffectiveQuad) -> Result<EffectiveCoefficient> {
    if quad.cell_resolution < 64 {
        return Err(Error::Invalid(format!(
            "effective-coefficient cell resolution must be >= 64, got {}",
            quad.cell_resolution
        )));
    }
    match &c.structure {
        Structure::PeriodicProduct { lambda, mu } | Structure::RandomProduct { lambda, mu } => {
            let mean_mu = mu.mean();
            let mean_nu = mean_ratio(mu, lambda, quad.cell_resolution)?;
            Ok(EffectiveCoefficient::constant(mean_mu * mean_mu / mean_nu))
        }
        Structure::RandomCheckerboard { a, b, prob_a, mu } => {
            let mean_mu = mu.mean();
            let e_inv_lambda = prob_a / a + (1.0 - prob_a) / b;
            Ok(EffectiveCoefficient::constant(mean_mu * mean_mu / (mean_mu * e_inv_lambda)))
        }
        Structure::PeriodicSymmetric(spec) | Structure::RandomSymmetric(spec) => {
            let spec = spec.clone();
            let dim = c.dim;
            let mc = quad.mc_samples;
            let seed = quad.mc_seed;
            let (probe_avg, stderr) = spec.cell_average(pt1(0.0), pt1(0.0), dim, mc, seed);
            if let Some(se) = stderr {
                if se > quad.mc_stderr_cap {
                    return Err(Error::McStderrTooLarge { stderr: se, cap: quad.mc_stderr_cap });
                }
            }
            let _ = probe_avg;
            let map = move |x: Point, y: Point| spec.cell_average(x, y, dim, mc, seed).0;
            Ok(EffectiveCoefficient { kind: EffectiveKind::TwoPointMap(Arc::new(map)), mc_stderr: stderr })
        }
    }
}

/// Monte Carlo estimate of the ensemble average of a random-symmetric field
/// over independent shift pairs drawn from `seeds` (all ordered pairs), with
/// its standard error. Used as a cross-check of the closed-form average.
pub fn ensemble_average_symmetric(
    c: &CoefficientField,
    x: Point,
    y: Point,
    seeds: &[u64],
) -> Result<(f64, f64)> {
    let spec = match &c.structure {
        Structure::RandomSymmetric(s) => s,
        _ => return Err(Error::Invalid("ensemble average requires a random-symmetric field".into())),
    };
    if seeds.len() < 2 {
        return Err(Error::SingleSeedEnsemble);
    }
    let shifts: Vec<Point> = seeds
        .iter()
        .map(|&s| {
            let mut rng = SplitMix64::keyed(s, 1);
            match c.dim {
                1 => pt1(rng.next_f64()),
                _ => [rng.next_f64(), rng.next_f64()],
            }
        })
        .collect();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut n = 0usize;
    for u1 in &shifts {
        for u2 in &shifts {
            let v = spec.value(x, y, *u1, *u2);
            sum += v;
            sumsq += v * v;
            n += 1;
        }
    }
    let mean = sum / n as f64;
    let var = (sumsq / n as f64 - mean * mean).max(0.0);
    Ok((mean, (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn product(lambda: CellFunction, mu: CellFunction, gamma: f64) -> CoefficientField {
        CoefficientField::new(1, Structure::PeriodicProduct { lambda, mu }, gamma, 0.25).unwrap()
    }

    #[test]
    fn identity_product_evaluates_to_one() {
        let c = product(CellFunction::Constant(1.0), CellFunction::Constant(1.0), 2.0);
        assert_eq!(c.eval(pt1(0.3), pt1(-0.7)).unwrap(), 1.0);
    }

    #[test]
    fn two_phase_lookup() {
        let c = product(
            CellFunction::TwoPhase { a: 1.0, b: 2.0, theta: 0.5 },
            CellFunction::Constant(1.0),
            2.0,
        );
        // x/eps = 0.05/0.25 = 0.2, frac 0.2 < 0.5 so lambda = 1
        assert_eq!(c.eval(pt1(0.05), pt1(0.9)).unwrap(), 1.0);
    }

    #[test]
    fn symmetric_cosine_at_origin() {
        let c = CoefficientField::new(
            1,
            Structure::PeriodicSymmetric(SymmetricSpec::CosineProduct { base: 2.0, amplitude: 1.0 }),
            3.0,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(c.eval(pt1(0.0), pt1(0.0)).unwrap(), 3.0);
    }

    #[test]
    fn symmetric_field_is_symmetric() {
        let c = CoefficientField::new(
            1,
            Structure::PeriodicSymmetric(SymmetricSpec::CosineProduct { base: 2.0, amplitude: 0.8 }),
            3.0,
            0.125,
        )
        .unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..1000 {
            let x = pt1(rng.uniform(-2.0, 2.0));
            let y = pt1(rng.uniform(-2.0, 2.0));
            assert_eq!(c.eval(x, y).unwrap(), c.eval(y, x).unwrap());
        }
    }

    #[test]
    fn nu_examples() {
        let c = product(CellFunction::Constant(1.0), CellFunction::Constant(1.0), 2.0);
        assert_eq!(c.eval_nu(pt1(0.1)).unwrap(), 1.0);

        let c = product(
            CellFunction::TwoPhase { a: 1.0, b: 2.0, theta: 0.5 },
            CellFunction::Constant(1.0),
            2.0,
        );
        // pick a point in the lambda = 2 phase: x/eps frac in [0.5, 1)
        assert_eq!(c.eval_nu(pt1(0.15)).unwrap(), 0.5);

        let c = product(CellFunction::Constant(2.0), CellFunction::Constant(3.0), 3.0);
        assert_eq!(c.eval_nu(pt1(0.0)).unwrap(), 1.5);
    }

    #[test]
    fn nu_rejected_for_symmetric() {
        let c = CoefficientField::new(
            1,
            Structure::PeriodicSymmetric(SymmetricSpec::CosineProduct { base: 2.0, amplitude: 1.0 }),
            3.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(c.eval_nu(pt1(0.0)), Err(Error::NotProductStructure)));
    }

    #[test]
    fn cell_functions_are_periodic() {
        let fns = [
            CellFunction::TwoPhase { a: 1.0, b: 2.0, theta: 0.37 },
            CellFunction::Cosine { a: 0.5, b: 2.0, axis: 0 },
            CellFunction::Constant(1.3),
        ];
        let mut rng = SplitMix64::new(11);
        for f in &fns {
            for _ in 0..500 {
                let x = rng.uniform(-3.0, 3.0);
                let z = rng.uniform(-4.0f64, 4.0).round();
                let a = f.value(pt1(x));
                let b = f.value(pt1(x + z));
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{f:?} at {x} + {z}");
            }
        }
    }

    #[test]
    fn out_of_range_cell_function_rejected() {
        let r = CoefficientField::new(
            1,
            Structure::PeriodicProduct {
                lambda: CellFunction::TwoPhase { a: 0.1, b: 2.0, theta: 0.5 },
                mu: CellFunction::Constant(1.0),
            },
            2.0,
            0.25,
        );
        assert!(matches!(r, Err(Error::RangeViolation { .. })));
    }

    #[test]
    fn random_field_requires_realization() {
        let c = CoefficientField::new(
            1,
            Structure::RandomCheckerboard {
                a: 1.0,
                b: 3.0,
                prob_a: 0.5,
                mu: CellFunction::Constant(1.0),
            },
            3.0,
            0.25,
        )
        .unwrap();
        assert!(matches!(c.eval(pt1(0.0), pt1(0.1)), Err(Error::RealizationMissing)));
        let drawn = c.draw_realization(9).unwrap();
        let v = drawn.eval(pt1(0.0), pt1(0.1)).unwrap();
        assert!(v == 1.0 || v == 3.0);
    }

    #[test]
    fn draw_on_periodic_is_error() {
        let c = product(CellFunction::Constant(1.0), CellFunction::Constant(1.0), 2.0);
        assert!(matches!(c.draw_realization(1), Err(Error::NotRandom)));
    }

    #[test]
    fn checkerboard_values_two_valued_and_deterministic() {
        let c = CoefficientField::new(
            1,
            Structure::RandomCheckerboard {
                a: 1.0,
                b: 3.0,
                prob_a: 0.5,
                mu: CellFunction::Constant(1.0),
            },
            3.0,
            0.125,
        )
        .unwrap();
        let d1 = c.draw_realization(42).unwrap();
        let d2 = c.draw_realization(42).unwrap();
        let mut rng = SplitMix64::new(0);
        for _ in 0..1000 {
            let x = pt1(rng.uniform(-4.0, 4.0));
            let y = pt1(rng.uniform(-4.0, 4.0));
            let v1 = d1.eval(x, y).unwrap();
            assert!(v1 == 1.0 || v1 == 3.0);
            assert_eq!(v1, d2.eval(x, y).unwrap());
        }
    }

    // Monte Carlo estimate of E[lambda(0, .)] for the {1,3} equiprobable law.
    #[test]
    fn checkerboard_mean_over_seeds() {
        let c = CoefficientField::new(
            1,
            Structure::RandomCheckerboard {
                a: 1.0,
                b: 3.0,
                prob_a: 0.5,
                mu: CellFunction::Constant(1.0),
            },
            3.0,
            1.0,
        )
        .unwrap();
        let n = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..n {
            let v = c.draw_realization(seed).unwrap().eval(pt1(0.0), pt1(10.0)).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let stderr = (var / n as f64).sqrt();
        assert!((mean - 2.0).abs() <= 3.0 * stderr, "mean {mean}, stderr {stderr}");
    }

    #[test]
    fn effective_identity_and_constants() {
        let q = EffectiveQuad::default();
        let c = product(CellFunction::Constant(1.0), CellFunction::Constant(1.0), 2.0);
        assert_eq!(effective_coefficient(&c, &q).unwrap().as_scalar().unwrap(), 1.0);

        let c = product(CellFunction::Constant(2.0), CellFunction::Constant(3.0), 3.0);
        assert_relative_eq!(
            effective_coefficient(&c, &q).unwrap().as_scalar().unwrap(),
            6.0,
            max_relative = 1e-12
        );
    }

    // <1/lambda> = 3/4 for the half-half {1,2} mix, so the scalar is 4/3;
    // the fine-midpoint quadrature oracle below recomputes it independently.
    #[test]
    fn effective_two_phase() {
        let q = EffectiveQuad::default();
        let c = product(
            CellFunction::TwoPhase { a: 1.0, b: 2.0, theta: 0.5 },
            CellFunction::Constant(1.0),
            2.0,
        );
        let v = effective_coefficient(&c, &q).unwrap().as_scalar().unwrap();
        assert_relative_eq!(v, 4.0 / 3.0, max_relative = 1e-10);

        let n = 1 << 16;
        let mut inv = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            inv += 1.0 / if t < 0.5 { 1.0 } else { 2.0 };
        }
        inv /= n as f64;
        assert_relative_eq!(v, 1.0 / inv, max_relative = 1e-10);
    }

    #[test]
    fn effective_checkerboard_exact() {
        let q = EffectiveQuad::default();
        let c = CoefficientField::new(
            1,
            Structure::RandomCheckerboard {
                a: 1.0,
                b: 2.0,
                prob_a: 0.5,
                mu: CellFunction::Constant(1.0),
            },
            2.0,
            0.25,
        )
        .unwrap();
        let v = effective_coefficient(&c, &q).unwrap().as_scalar().unwrap();
        assert_relative_eq!(v, 4.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn effective_symmetric_cosine_is_base() {
        let q = EffectiveQuad::default();
        let c = CoefficientField::new(
            1,
            Structure::PeriodicSymmetric(SymmetricSpec::CosineProduct { base: 2.0, amplitude: 1.0 }),
            3.0,
            0.25,
        )
        .unwrap();
        let eff = effective_coefficient(&c, &q).unwrap();
        assert_relative_eq!(eff.value_at(pt1(0.3), pt1(-0.2)), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn harmonic_arithmetic_and_cauchy_schwarz_bounds() {
        let q = EffectiveQuad::default();
        let catalog = [
            CellFunction::Constant(1.5),
            CellFunction::TwoPhase { a: 1.0, b: 2.0, theta: 0.3 },
            CellFunction::Cosine { a: 0.6, b: 1.8, axis: 0 },
        ];
        for lambda in &catalog {
            for mu in &catalog {
                let c = product(lambda.clone(), mu.clone(), 2.0);
                let v = effective_coefficient(&c, &q).unwrap().as_scalar().unwrap();
                // Cauchy-Schwarz: <mu>^2 <= <mu/lambda><mu lambda>
                let bp: Vec<f64> = {
                    let mut b = lambda.breakpoints();
                    b.extend(mu.breakpoints());
                    b
                };
                let mean_mul =
                    periodic_mean_1d(|t| mu.value(pt1(t)) * lambda.value(pt1(t)), &bp, 4096);
                assert!(v <= mean_mul * (1.0 + 1e-9), "{v} vs {mean_mul}");
                // range bound
                let g = c.gamma;
                assert!(v >= g.powi(-4) - 1e-12 && v <= g.powi(4) + 1e-12);
                // harmonic-arithmetic when mu = 1
                if matches!(mu, CellFunction::Constant(c) if *c == 1.0) {
                    let mean_l = periodic_mean_1d(|t| lambda.value(pt1(t)), &bp, 4096);
                    assert!(v <= mean_l * (1.0 + 1e-9));
                }
            }
        }
    }

    // Distribution of lambda(x, .) should not depend on x (two-sample KS below
    // the 1% critical value).
    #[test]
    fn stationarity_proxy_ks() {
        let c = CoefficientField::new(
            1,
            Structure::RandomCheckerboard {
                a: 1.0,
                b: 3.0,
                prob_a: 0.5,
                mu: CellFunction::Constant(1.0),
            },
            3.0,
            1.0,
        )
        .unwrap();
        let n = 10_000u64;
        let probes = [0.0, 0.31, 1.72, -2.4, 5.9];
        let mut fractions = Vec::new();
        for &x in &probes {
            let mut low = 0usize;
            for seed in 0..n {
                if c.draw_realization(seed).unwrap().eval(pt1(x), pt1(100.0)).unwrap() == 1.0 {
                    low += 1;
                }
            }
            fractions.push(low as f64 / n as f64);
        }
        // two-valued law: the KS statistic between two samples is the gap of
        // the low-value fractions; 1% critical value for n = m = 1e4
        let crit = 1.628 * ((2.0 * n as f64) / (n as f64 * n as f64)).sqrt();
        for i in 0..fractions.len() {
            for j in (i + 1)..fractions.len() {
                assert!(
                    (fractions[i] - fractions[j]).abs() < crit,
                    "KS statistic {} at probes {i},{j} exceeds {crit}",
                    (fractions[i] - fractions[j]).abs()
                );
            }
        }
    }

    // Spatial average over [0, R] of a single drawn realization approaches the
    // ensemble mean (Birkhoff proxy at R = 1e3 cells).
    #[test]
    fn birkhoff_proxy_spatial_average() {
        let c = CoefficientField::new(
            1,
            Structure::RandomCheckerboard {
                a: 1.0,
                b: 3.0,
                prob_a: 0.5,
                mu: CellFunction::Constant(1.0),
            },
            3.0,
            1.0,
        )
        .unwrap();
        for seed in [2u64, 3, 4, 5] {
            let d = c.draw_realization(seed).unwrap();
            let cells = 1000;
            let mut acc = 0.0;
            for i in 0..cells {
                acc += d.eval(pt1(i as f64 + 0.5), pt1(1e6)).unwrap();
            }
            let avg = acc / cells as f64;
            assert!((avg - 2.0).abs() / 2.0 < 0.02, "seed {seed}: average {avg}");
        }
    }

    #[test]
    fn ensemble_average_matches_closed_form() {
        let c = CoefficientField::new(
            1,
            Structure::RandomSymmetric(SymmetricSpec::CosineProduct { base: 2.0, amplitude: 1.0 }),
            3.0,
            0.25,
        )
        .unwrap();
        let seeds: Vec<u64> = (0..32).collect();
        let (mean, stderr) = ensemble_average_symmetric(&c, pt1(0.0), pt1(0.5), &seeds).unwrap();
        assert!((mean - 2.0).abs() <= 5.0 * stderr.max(1e-3), "mean {mean} stderr {stderr}");
    }

    #[test]
    fn same_seed_same_field() {
        let c = CoefficientField::new(
            1,
            Structure::RandomProduct {
                lambda: CellFunction::Cosine { a: 0.5, b: 2.0, axis: 0 },
                mu: CellFunction::Constant(1.0),
            },
            2.0,
            0.125,
        )
        .unwrap();
        let a = c.draw_realization(7).unwrap();
        let b = c.draw_realization(7).unwrap();
        let mut rng = SplitMix64::new(2);
        for _ in 0..1000 {
            let x = pt1(rng.uniform(-1.0, 1.0));
            let y = pt1(rng.uniform(-1.0, 1.0));
            assert_eq!(a.eval(x, y).unwrap(), b.eval(x, y).unwrap());
        }
    }
}
