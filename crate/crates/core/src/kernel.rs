//! Singular symmetric jump kernels and numerical verification of the
//! structural assumptions they must satisfy.
//!
//! Convolution kernels K(z) are checked against the A-family:
//! nonnegativity/symmetry, the Levy-Khintchine integrability of
//! min(1, |z|^2) K(z), a uniform tail bound r^alpha * int_{|z|>r} K, and a
//! directional coercivity lower bound r^{alpha-2} * int_{B_r} |e.z|^2 K.
//! General two-point kernels K(x, y) are checked against the B-family, where
//! coercivity is replaced by a lower-density condition: inside every ball a
//! fixed fraction of points must see at least C2 |x-y|^{-d-alpha}.
//!
//! All radial integrals run on a log axis with an analytic power-law closure
//! beyond the numeric range, so witnesses for pure power kernels are exact to
//! quadrature tolerance at every probed radius.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::{add, dist, pt1, pt2, Point};
use crate::quad;
use crate::rng::SplitMix64;

/// Profile of a convolution kernel K(z).
#[derive(Clone)]
pub enum ConvProfile {
    /// |z|^{-d-alpha}, the fractional-Laplacian kernel.
    FractionalPower,
    /// e^{-|z|} |z|^{-d-alpha}: passes the tail and integrability checks but
    /// loses coercivity at large radii, a deliberate negative control.
    Tempered,
    /// Arbitrary user profile z -> K(z).
    Custom(Arc<dyn Fn(usize, Point) -> f64 + Send + Sync>),
}

/// Profile of a general two-point kernel K(x, y).
#[derive(Clone)]
pub enum GeneralProfile {
    /// a(x) a(y) |x-y|^{-d-alpha} with a(x) = exp(ln(upsilon) cos(2 pi x_1)),
    /// so both multipliers range over [1/upsilon, upsilon] exactly.
    PerturbedFractional { upsilon: f64 },
    /// Arbitrary user map (x, y) -> K(x, y).
    Custom(Arc<dyn Fn(usize, Point, Point) -> f64 + Send + Sync>),
}

#[derive(Clone)]
pub enum KernelFamily {
    Convolution(ConvProfile),
    General(GeneralProfile),
}

/// A singular symmetric kernel together with its order and dimension.
#[derive(Clone)]
pub struct Kernel {
    pub dim: usize,
    pub alpha: f64,
    pub family: KernelFamily,
}

/// Evaluation result; the diagonal singularity is reported as a sentinel
/// (maximum finite value plus a flag) rather than an IEEE infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub unbounded: bool,
}

impl KernelValue {
    pub fn finite(v: f64) -> Self {
        KernelValue { value: v, unbounded: false }
    }

    pub fn infinite() -> Self {
        KernelValue { value: f64::MAX, unbounded: true }
    }
}

impl Kernel {
    fn check_dim_alpha(dim: usize, alpha: f64, alpha_hi: f64) -> Result<()> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(alpha > 0.0 && alpha < alpha_hi) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(())
    }

    pub fn fractional(dim: usize, alpha: f64) -> Result<Self> {
        Self::check_dim_alpha(dim, alpha, 2.0)?;
        Ok(Kernel { dim, alpha, family: KernelFamily::Convolution(ConvProfile::FractionalPower) })
    }

    /// Fractional kernel with alpha admitted up to `alpha_cap`; the nonlinear
    /// problem allows alpha in (0, p) with p > 1.
    pub fn fractional_with_cap(dim: usize, alpha: f64, alpha_cap: f64) -> Result<Self> {
        Self::check_dim_alpha(dim, alpha, alpha_cap)?;
        Ok(Kernel { dim, alpha, family: KernelFamily::Convolution(ConvProfile::FractionalPower) })
    }

    pub fn tempered(dim: usize, alpha: f64) -> Result<Self> {
        Self::check_dim_alpha(dim, alpha, 2.0)?;
        Ok(Kernel { dim, alpha, family: KernelFamily::Convolution(ConvProfile::Tempered) })
    }

    pub fn perturbed_fractional(dim: usize, alpha: f64, upsilon: f64) -> Result<Self> {
        Self::check_dim_alpha(dim, alpha, 2.0)?;
        if upsilon < 1.0 {
            return Err(Error::Invalid(format!("upsilon must be >= 1, got {upsilon}")));
        }
        Ok(Kernel {
            dim,
            alpha,
            family: KernelFamily::General(GeneralProfile::PerturbedFractional { upsilon }),
        })
    }

    pub fn custom_convolution(
        dim: usize,
        alpha: f64,
        profile: Arc<dyn Fn(usize, Point) -> f64 + Send + Sync>,
    ) -> Result<Self> {
        Self::check_dim_alpha(dim, alpha, 2.0)?;
        Ok(Kernel { dim, alpha, family: KernelFamily::Convolution(ConvProfile::Custom(profile)) })
    }

    pub fn custom_general(
        dim: usize,
        alpha: f64,
        map: Arc<dyn Fn(usize, Point, Point) -> f64 + Send + Sync>,
    ) -> Result<Self> {
        Self::check_dim_alpha(dim, alpha, 2.0)?;
        Ok(Kernel { dim, alpha, family: KernelFamily::General(GeneralProfile::Custom(map)) })
    }

    pub fn is_convolution(&self) -> bool {
        matches!(self.family, KernelFamily::Convolution(_))
    }

    /// True for kernels whose radial part is exactly |z|^{-d-alpha}; those
    /// get analytic tail closures in assembly.
    pub fn is_pure_power(&self) -> bool {
        matches!(self.family, KernelFamily::Convolution(ConvProfile::FractionalPower))
    }

    #[inline]
    fn power(&self, r: f64) -> f64 {
        r.powf(-(self.dim as f64) - self.alpha)
    }

    /// Hot-path evaluation; never called with x == y by the quadrature
    /// routines (they sample strictly inside subcells).
    #[inline]
    pub fn eval_pt(&self, x: Point, y: Point) -> f64 {
        match &self.family {
            KernelFamily::Convolution(p) => {
                let r = dist(self.dim, x, y);
                match p {
                    ConvProfile::FractionalPower => self.power(r),
                    ConvProfile::Tempered => (-r).exp() * self.power(r),
                    ConvProfile::Custom(f) => f(self.dim, [x[0] - y[0], x[1] - y[1]]),
                }
            }
            KernelFamily::General(p) => match p {
                GeneralProfile::PerturbedFractional { upsilon } => {
                    let s = upsilon.ln();
                    let ax = (s * (2.0 * std::f64::consts::PI * x[0]).cos()).exp();
                    let ay = (s * (2.0 * std::f64::consts::PI * y[0]).cos()).exp();
                    ax * ay * self.power(dist(self.dim, x, y))
                }
                GeneralProfile::Custom(f) => f(self.dim, x, y),
            },
        }
    }

    /// Evaluate K(x, y) with dimension checking and the diagonal sentinel.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<KernelValue> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: if x.len() != self.dim { x.len() } else { y.len() },
            });
        }
        let xp = if self.dim == 1 { pt1(x[0]) } else { pt2(x[0], x[1]) };
        let yp = if self.dim == 1 { pt1(y[0]) } else { pt2(y[0], y[1]) };
        if xp == yp {
            return Ok(KernelValue::infinite());
        }
        let v = self.eval_pt(xp, yp);
        if v.is_finite() {
            Ok(KernelValue::finite(v))
        } else {
            Ok(KernelValue::infinite())
        }
    }

    /// Mean of K(x, x + rho * theta) over directions theta, times the sphere
    /// measure: the angular factor of a shell integral centered at x.
    fn angular_shell(&self, x: Point, rho: f64) -> f64 {
        match self.dim {
            1 => self.eval_pt(x, add(x, pt1(rho))) + self.eval_pt(x, add(x, pt1(-rho))),
            _ => {
                let n = 64;
                let mut acc = 0.0;
                for j in 0..n {
                    let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
                    acc += self.eval_pt(x, add(x, pt2(rho * th.cos(), rho * th.sin())));
                }
                acc * 2.0 * std::f64::consts::PI / n as f64
            }
        }
    }

    /// int_{r <= |y-x| <= R} K(x, y) w(|y-x|) dy by adaptive quadrature on a
    /// log axis.
    fn shell_integral<W: Fn(f64) -> f64>(
        &self,
        x: Point,
        r: f64,
        big_r: f64,
        weight: W,
        tol: f64,
    ) -> Result<f64> {
        let d = self.dim as f64;
        let f = |rho: f64| rho.powf(d - 1.0) * self.angular_shell(x, rho) * weight(rho);
        let (v, ok) = quad::adaptive_log(f, r, big_r, tol, 48);
        if !ok {
            return Err(Error::QuadratureBudget(format!("shell integral on [{r}, {big_r}]")));
        }
        Ok(v)
    }

    /// Tail mass int_{|y-x| > r} K(x, y) dy: numeric out to a large radius,
    /// closed by the power law matched at the endpoint (exact for pure power
    /// kernels, an upper estimate for faster-decaying ones).
    pub fn tail_mass(&self, x: Point, r: f64, tol: f64) -> Result<f64> {
        let d = self.dim as f64;
        let big_r = (4.0 * r).max(200.0);
        let numeric = self.shell_integral(x, r, big_r, |_| 1.0, tol)?;
        let edge = big_r.powf(d - 1.0) * self.angular_shell(x, big_r);
        // if the integrand at R decays like c rho^{-1-alpha}, the remainder is edge * R / alpha
        let closure = edge * big_r / self.alpha;
        Ok(numeric + closure)
    }
}

/// The seven structural assumptions the verifier can probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssumptionKind {
    A1Symmetry,
    A2LevyKhintchine,
    A3Tail,
    A4Coercivity,
    B1Symmetry,
    B2Tail,
    B3LowerDensity,
}

impl AssumptionKind {
    pub fn label(&self) -> &'static str {
        match self {
            AssumptionKind::A1Symmetry => "A1_symmetry",
            AssumptionKind::A2LevyKhintchine => "A2_levy_khintchine",
            AssumptionKind::A3Tail => "A3_tail",
            AssumptionKind::A4Coercivity => "A4_coercivity",
            AssumptionKind::B1Symmetry => "B1_symmetry",
            AssumptionKind::B2Tail => "B2_tail",
            AssumptionKind::B3LowerDensity => "B3_lower_density",
        }
    }

    pub fn needs_convolution(&self) -> bool {
        matches!(
            self,
            AssumptionKind::A1Symmetry
                | AssumptionKind::A2LevyKhintchine
                | AssumptionKind::A3Tail
                | AssumptionKind::A4Coercivity
        )
    }

    pub fn all() -> [AssumptionKind; 7] {
        [
            AssumptionKind::A1Symmetry,
            AssumptionKind::A2LevyKhintchine,
            AssumptionKind::A3Tail,
            AssumptionKind::A4Coercivity,
            AssumptionKind::B1Symmetry,
            AssumptionKind::B2Tail,
            AssumptionKind::B3LowerDensity,
        ]
    }
}

/// Pass/fail thresholds. The source material never fixes admissible
/// constants, so they are configuration, not guesses baked into code.
#[derive(Clone, Copy, Debug)]
pub struct Thresholds {
    /// Cap C0 for the tail witnesses (A3/B2).
    pub tail_cap: f64,
    /// Cap for the Levy-Khintchine integral (A2).
    pub lk_cap: f64,
    /// Floor c0 for the coercivity witness (A4).
    pub coercivity_floor: f64,
    /// Required density fraction C1 in (0, 1) for B3.
    pub density_fraction: f64,
    /// Comparison constant C2 for B3.
    pub density_scale: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tail_cap: 1e6,
            lk_cap: 1e9,
            coercivity_floor: 1e-2,
            density_fraction: 0.5,
            density_scale: 1.0,
        }
    }
}

/// Probe configuration for `verify_assumption`.
#[derive(Clone, Debug)]
pub struct ProbeConfig {
    /// Radii ladder; the default geometric ladder 1e-3 * 2^k spans [1e-3, 1e3].
    pub radii: Vec<f64>,
    /// Monte Carlo sample count (B3 measure estimates, symmetry pairs, B2 centers).
    pub sample_count: usize,
    /// Number of sampled balls for B3.
    pub ball_count: usize,
    pub quad_tol: f64,
    pub seed: u64,
    pub thresholds: Thresholds,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            radii: default_radii(),
            sample_count: 2000,
            ball_count: 64,
            quad_tol: 1e-9,
            seed: 0x5eed,
            thresholds: Thresholds::default(),
        }
    }
}

pub fn default_radii() -> Vec<f64> {
    (0..=20).map(|k| 1e-3 * (1u64 << k) as f64).collect()
}

/// Where the verified bound was tightest (or violated).
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub kind: AssumptionKind,
    pub passed: bool,
    pub witness_constant: f64,
    pub worst_radius: Option<f64>,
    pub worst_point: Option<Point>,
}

fn random_point(rng: &mut SplitMix64, dim: usize, lo: f64, hi: f64) -> Point {
    match dim {
        1 => pt1(rng.uniform(lo, hi)),
        _ => pt2(rng.uniform(lo, hi), rng.uniform(lo, hi)),
    }
}

fn point_in_ball(rng: &mut SplitMix64, dim: usize, center: Point, radius: f64) -> Point {
    match dim {
        1 => pt1(center[0] + rng.uniform(-radius, radius)),
        _ => {
            let r = radius * rng.next_f64().sqrt();
            let th = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
            add(center, pt2(r * th.cos(), r * th.sin()))
        }
    }
}

/// Wilson score lower bound at ~99% confidence.
fn wilson_lower(successes: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let z = 2.5758293035489004;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - spread) / denom).max(0.0)
}

/// Numerically verify one structural assumption of a kernel.
pub fn verify_assumption(k: &Kernel, kind: AssumptionKind, probe: &ProbeConfig) -> Result<AssumptionReport> {
    if probe.radii.is_empty() || probe.radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidProbe);
    }
    if kind.needs_convolution() && !k.is_convolution() {
        return Err(Error::AssumptionNeedsConvolution(kind));
    }
    let th = probe.thresholds;
    match kind {
        AssumptionKind::A1Symmetry | AssumptionKind::B1Symmetry => {
            let mut rng = SplitMix64::keyed(probe.seed, 11);
            let mut worst = 0.0f64;
            let mut worst_pt = None;
            let mut nonneg = true;
            for _ in 0..probe.sample_count.max(1) {
                let x = random_point(&mut rng, k.dim, -10.0, 10.0);
                let y = random_point(&mut rng, k.dim, -10.0, 10.0);
                if x == y {
                    continue;
                }
                let kxy = k.eval_pt(x, y);
                let kyx = k.eval_pt(y, x);
                if kxy < 0.0 || kyx < 0.0 {
                    nonneg = false;
                }
                let gap = (kxy - kyx).abs();
                let scale = kxy.abs().max(kyx.abs()).max(1.0);
                if gap / scale > worst {
                    worst = gap / scale;
                    worst_pt = Some(x);
                }
            }
            Ok(AssumptionReport {
                kind,
                passed: nonneg && worst <= 1e-12,
                witness_constant: worst,
                worst_radius: None,
                worst_point: worst_pt,
            })
        }
        AssumptionKind::A2LevyKhintchine => {
            let origin = pt1(0.0);
            // inner part: int_{|z|<=1} |z|^2 K; the integrand rho^{d+1} K ~ rho^{1-alpha}
            // vanishes at 0, so a tiny cutoff with a power-law closure is exact enough
            let eps = 1e-10;
            let inner = k.shell_integral(origin, eps, 1.0, |rho| rho * rho, probe.quad_tol)?;
            let d = k.dim as f64;
            let edge = eps.powf(d + 1.0) * k.angular_shell(origin, eps);
            let inner_closure = edge * eps / (2.0 - k.alpha);
            let outer = k.tail_mass(origin, 1.0, probe.quad_tol)?;
            let total = inner + inner_closure + outer;
            Ok(AssumptionReport {
                kind,
                passed: total.is_finite() && total <= th.lk_cap,
                witness_constant: total,
                worst_radius: None,
                worst_point: None,
            })
        }
        AssumptionKind::A3Tail => {
            let origin = pt1(0.0);
            let mut worst = f64::NEG_INFINITY;
            let mut worst_r = None;
            for &r in &probe.radii {
                let w = r.powf(k.alpha) * k.tail_mass(origin, r, probe.quad_tol)?;
                if w > worst {
                    worst = w;
                    worst_r = Some(r);
                }
            }
            Ok(AssumptionReport {
                kind,
                passed: worst.is_finite() && worst <= th.tail_cap,
                witness_constant: worst,
                worst_radius: worst_r,
                worst_point: None,
            })
        }
        AssumptionKind::A4Coercivity => {
            let origin = pt1(0.0);
            let dirs: Vec<Point> = match k.dim {
                1 => vec![pt1(1.0), pt1(-1.0)],
                _ => (0..64)
                    .map(|j| {
                        let t = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
                        pt2(t.cos(), t.sin())
                    })
                    .collect(),
            };
            let mut worst = f64::INFINITY;
            let mut worst_r = None;
            for &r in &probe.radii {
                for e in &dirs {
                    // int_{B_r} |e.z|^2 K(z) dz via the radial/angular split
                    let d = k.dim as f64;
                    let eps = r * 1e-10;
                    let f = |rho: f64| {
                        rho.powf(d - 1.0) * rho * rho * match k.dim {
                            1 => {
                                k.eval_pt(origin, pt1(rho)) * e[0] * e[0]
                                    + k.eval_pt(origin, pt1(-rho)) * e[0] * e[0]
                            }
                            _ => {
                                let n = 64;
                                let mut acc = 0.0;
                                for j in 0..n {
                                    let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
                                    let z = pt2(rho * t.cos(), rho * t.sin());
                                    let ez = e[0] * z[0] + e[1] * z[1];
                                    acc += k.eval_pt(origin, z) * (ez / rho) * (ez / rho);
                                }
                                acc * 2.0 * std::f64::consts::PI / n as f64
                            }
                        }
                    };
                    let (v, ok) = quad::adaptive_log(f, eps, r, probe.quad_tol, 48);
                    if !ok {
                        return Err(Error::QuadratureBudget(format!("coercivity integral at r={r}")));
                    }
                    // integrand ~ c rho^{1-alpha} near 0; close the truncated head analytically
                    let head = f(eps) * eps / (2.0 - k.alpha);
                    let w = r.powf(k.alpha - 2.0) * (v + head);
                    if w < worst {
                        worst = w;
                        worst_r = Some(r);
                    }
                }
            }
            Ok(AssumptionReport {
                kind,
                passed: worst >= th.coercivity_floor,
                witness_constant: worst,
                worst_radius: worst_r,
                worst_point: None,
            })
        }
        AssumptionKind::B2Tail => {
            let mut rng = SplitMix64::keyed(probe.seed, 22);
            let centers: Vec<Point> = if k.is_convolution() {
                vec![pt1(0.0)]
            } else {
                (0..16).map(|_| random_point(&mut rng, k.dim, -1.0, 1.0)).collect()
            };
            let mut worst = f64::NEG_INFINITY;
            let mut worst_r = None;
            let mut worst_x = None;
            for x in &centers {
                for &r in &probe.radii {
                    let w = r.powf(k.alpha) * k.tail_mass(*x, r, probe.quad_tol)?;
                    if w > worst {
                        worst = w;
                        worst_r = Some(r);
                        worst_x = Some(*x);
                    }
                }
            }
            Ok(AssumptionReport {
                kind,
                passed: worst.is_finite() && worst <= th.tail_cap,
                witness_constant: worst,
                worst_radius: worst_r,
                worst_point: worst_x,
            })
        }
        AssumptionKind::B3LowerDensity => {
            let samples = probe.sample_count.max(1000);
            let mut rng = SplitMix64::keyed(probe.seed, 33);
            let mut worst_frac = f64::INFINITY;
            let mut worst_lower = f64::INFINITY;
            let mut worst_pt = None;
            let mut worst_r = None;
            let d = k.dim as f64;
            for _ in 0..probe.ball_count.max(1) {
                let radius = (rng.uniform(1e-2_f64.ln(), 10.0_f64.ln())).exp();
                let center = random_point(&mut rng, k.dim, -1.0, 1.0);
                let x = point_in_ball(&mut rng, k.dim, center, radius);
                let mut hits = 0usize;
                for _ in 0..samples {
                    let y = point_in_ball(&mut rng, k.dim, center, radius);
                    let r = dist(k.dim, x, y);
                    if r == 0.0 {
                        hits += 1;
                        continue;
                    }
                    let bound = th.density_scale * r.powf(-d - k.alpha);
                    if k.eval_pt(x, y) >= bound {
                        hits += 1;
                    }
                }
                let frac = hits as f64 / samples as f64;
                let lower = wilson_lower(hits, samples);
                if frac < worst_frac {
                    worst_frac = frac;
                    worst_pt = Some(x);
                    worst_r = Some(radius);
                }
                worst_lower = worst_lower.min(lower);
            }
            Ok(AssumptionReport {
                kind,
                passed: worst_lower >= th.density_fraction,
                witness_constant: worst_frac,
                worst_radius: worst_r,
                worst_point: worst_pt,
            })
        }
    }
}

/// Verify every assumption applicable to the kernel's family.
pub fn verify_all(k: &Kernel, probe: &ProbeConfig) -> Result<Vec<AssumptionReport>> {
    let mut out = Vec::new();
    for kind in AssumptionKind::all() {
        if kind.needs_convolution() && !k.is_convolution() {
            continue;
        }
        out.push(verify_assumption(k, kind, probe)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn probe() -> ProbeConfig {
        ProbeConfig { sample_count: 500, ball_count: 24, ..ProbeConfig::default() }
    }

    #[test]
    fn fractional_power_evaluation() {
        let k = Kernel::fractional(1, 0.5).unwrap();
        let v = k.eval(&[0.0], &[2.0]).unwrap();
        assert!(!v.unbounded);
        assert_relative_eq!(v.value, 2.0_f64.powf(-1.5), max_relative = 1e-15);
    }

    #[test]
    fn diagonal_is_sentinel() {
        for k in [
            Kernel::fractional(1, 0.5).unwrap(),
            Kernel::tempered(1, 0.5).unwrap(),
            Kernel::perturbed_fractional(2, 0.7, 2.0).unwrap(),
        ] {
            let p = vec![0.25; k.dim];
            let v = k.eval(&p, &p).unwrap();
            assert!(v.unbounded);
            assert_eq!(v.value, f64::MAX);
        }
    }

    #[test]
    fn tempered_evaluation() {
        let k = Kernel::tempered(1, 0.5).unwrap();
        let v = k.eval(&[0.0], &[1.0]).unwrap();
        assert_relative_eq!(v.value, (-1.0_f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let k = Kernel::fractional(2, 0.5).unwrap();
        assert!(matches!(k.eval(&[0.0], &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn symmetry_exact_on_sampled_pairs() {
        let kernels = [
            Kernel::fractional(1, 0.5).unwrap(),
            Kernel::tempered(1, 1.2).unwrap(),
            Kernel::perturbed_fractional(1, 0.5, 2.0).unwrap(),
            Kernel::fractional(2, 0.8).unwrap(),
        ];
        let mut rng = SplitMix64::new(7);
        for k in &kernels {
            for _ in 0..10_000 {
                let x = random_point(&mut rng, k.dim, -5.0, 5.0);
                let y = random_point(&mut rng, k.dim, -5.0, 5.0);
                if x == y {
                    continue;
                }
                assert_eq!(k.eval_pt(x, y), k.eval_pt(y, x));
            }
        }
    }

    #[test]
    fn perturbed_kernel_is_sandwiched() {
        let ups = 2.0;
        let k = Kernel::perturbed_fractional(1, 0.5, ups).unwrap();
        let base = Kernel::fractional(1, 0.5).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..2000 {
            let x = random_point(&mut rng, 1, -3.0, 3.0);
            let y = random_point(&mut rng, 1, -3.0, 3.0);
            if x == y {
                continue;
            }
            let v = k.eval_pt(x, y);
            let b = base.eval_pt(x, y);
            assert!(v >= b / (ups * ups) - 1e-12 * b);
            assert!(v <= b * ups * ups + 1e-12 * b);
        }
    }

    // Tail witness for |z|^{-1.5} in 1D: r^{1/2} * 4 r^{-1/2} = 4 at every radius.
    #[test]
    fn a3_witness_is_four() {
        let k = Kernel::fractional(1, 0.5).unwrap();
        let rep = verify_assumption(&k, AssumptionKind::A3Tail, &probe()).unwrap();
        assert!(rep.passed);
        assert_relative_eq!(rep.witness_constant, 4.0, max_relative = 1e-6);
    }

    #[test]
    fn a3_witness_radius_independent() {
        let k = Kernel::fractional(1, 0.5).unwrap();
        let p = probe();
        let mut values = Vec::new();
        for &r in &p.radii {
            values.push(r.powf(0.5) * k.tail_mass(pt1(0.0), r, p.quad_tol).unwrap());
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((hi - lo) / hi <= 1e-6, "spread {} too wide", (hi - lo) / hi);
    }

    // Coercivity witness: r^{-3/2} * 2 int_0^r z^{1/2} dz = 4/3.
    #[test]
    fn a4_witness_is_four_thirds() {
        let k = Kernel::fractional(1, 0.5).unwrap();
        let rep = verify_assumption(&k, AssumptionKind::A4Coercivity, &probe()).unwrap();
        assert!(rep.passed);
        assert_relative_eq!(rep.witness_constant, 4.0 / 3.0, max_relative = 1e-6);
    }

    // Levy-Khintchine integral: 2 int_0^1 z^{1/2} + 2 int_1^inf z^{-3/2} = 4/3 + 4.
    #[test]
    fn a2_integral_is_sixteen_thirds() {
        let k = Kernel::fractional(1, 0.5).unwrap();
        let rep = verify_assumption(&k, AssumptionKind::A2LevyKhintchine, &probe()).unwrap();
        assert!(rep.passed);
        assert_relative_eq!(rep.witness_constant, 16.0 / 3.0, max_relative = 1e-6);
    }

    // 2 int_0^100 z^{1/2} e^{-z} dz ~ 2 Gamma(3/2) = sqrt(pi); witness ~ sqrt(pi) * 1e-3.
    #[test]
    fn tempered_fails_coercivity_at_large_radius() {
        let k = Kernel::tempered(1, 0.5).unwrap();
        let mut p = probe();
        p.radii = vec![100.0];
        let rep = verify_assumption(&k, AssumptionKind::A4Coercivity, &p).unwrap();
        assert!(!rep.passed);
        assert_relative_eq!(
            rep.witness_constant,
            std::f64::consts::PI.sqrt() * 1e-3,
            max_relative = 1e-4
        );
    }

    #[test]
    fn tempered_passes_a1_to_a3() {
        let k = Kernel::tempered(1, 0.5).unwrap();
        let p = probe();
        for kind in [AssumptionKind::A1Symmetry, AssumptionKind::A2LevyKhintchine, AssumptionKind::A3Tail] {
            assert!(verify_assumption(&k, kind, &p).unwrap().passed, "{kind:?}");
        }
        let rep = verify_assumption(&k, AssumptionKind::A4Coercivity, &p).unwrap();
        assert!(!rep.passed, "negative control must fail coercivity on the full ladder");
    }

    #[test]
    fn b3_density_is_one_for_fractional_power() {
        let k = Kernel::fractional(1, 0.5).unwrap();
        let rep = verify_assumption(&k, AssumptionKind::B3LowerDensity, &probe()).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.witness_constant, 1.0);
    }

    #[test]
    fn a_kind_requires_convolution() {
        let k = Kernel::perturbed_fractional(1, 0.5, 2.0).unwrap();
        assert!(matches!(
            verify_assumption(&k, AssumptionKind::A3Tail, &probe()),
            Err(Error::AssumptionNeedsConvolution(_))
        ));
    }

    #[test]
    fn b2_tail_for_perturbed_kernel() {
        let k = Kernel::perturbed_fractional(1, 0.5, 2.0).unwrap();
        let mut p = probe();
        p.radii = vec![0.01, 1.0, 100.0];
        let rep = verify_assumption(&k, AssumptionKind::B2Tail, &p).unwrap();
        assert!(rep.passed);
        // sandwiched by 4 * upsilon^2 = 16
        assert!(rep.witness_constant <= 16.0 + 1e-6);
        assert!(rep.witness_constant >= 1.0);
    }
}
