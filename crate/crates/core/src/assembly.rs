//! Galerkin discretization of the nonlocal weak forms on a truncated box
//! with zero exterior data.
//!
//! The basis is piecewise constant, so every matrix entry is a double cell
//! integral of K(x, y) times a bounded weight:
//!
//!   A_ij = -int_{C_i x C_j} K W,   i != j,
//!   A_ii = sum_{j != i} |A_ij| + e_i,
//!
//! where e_i is the interaction of cell i with the whole exterior of the box.
//! Off-diagonals are nonpositive and rows sum to e_i >= 0, so A is a
//! symmetric M-matrix by construction.
//!
//! Pair integrals split into three regimes mirroring a near/far/tail
//! decomposition of the plane: disjoint pairs use adaptive tensor Gauss
//! rules, touching pairs peel the diagonal singularity off level by level
//! with a geometric-series closure for the remaining corner, and the
//! exterior beyond the far cutoff is closed analytically with the kernel's
//! tail exponent. Touching-pair integrals are finite only for alpha < 1 on
//! piecewise constants; assembly rejects larger orders.

use rayon::prelude::*;

use crate::coeff::{CoefficientField, EffectiveCoefficient, EffectiveQuad, Structure};
use crate::error::{Error, Result};
use crate::geom::{pt1, pt2, Cell, Point};
use crate::grid::{Grid, GridFunction};
use crate::kernel::Kernel;
use crate::matrix::DenseMatrix;
use crate::quad::GAUSS4;

/// Near/far/tail split of the quadrature work.
#[derive(Clone, Copy, Debug)]
pub struct TailPolicy {
    /// Far-field cutoff; exterior interactions beyond this radius are closed
    /// analytically.
    pub r_far: f64,
    /// Subdivision depth cap for both the disjoint recursion and the
    /// touching-pair level scheme.
    pub max_depth: usize,
    /// Relative tolerance per matrix entry, in (0, 1e-4].
    pub tolerance: f64,
}

impl TailPolicy {
    pub fn new(r_far: f64, max_depth: usize, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance <= 1e-4) {
            return Err(Error::BadTailTolerance(tolerance));
        }
        Ok(TailPolicy { r_far, max_depth, tolerance })
    }

    pub fn default_for(half_width: f64) -> Self {
        TailPolicy { r_far: 16.0 * half_width, max_depth: 60, tolerance: 1e-6 }
    }
}

/// The coefficient weight entering the pair integrals, the mass weight nu,
/// and the far-field average of the y-oscillation.
pub trait PairWeight: Sync {
    fn dim(&self) -> usize;
    /// W(x, y): mu(x) mu(y) for product structure, Lambda(x, y) for symmetric.
    fn weight(&self, x: Point, y: Point) -> f64;
    /// nu(x): mass/right-hand-side weight (mu/lambda for product, 1 otherwise).
    fn nu(&self, x: Point) -> f64;
    /// W(x, y) with the oscillation in y averaged out, for tail closures.
    fn far_weight(&self, x: Point) -> f64;
    /// Cell average of nu. Default: per-cell Gauss rule; implementations with
    /// known jump lines should integrate piecewise exactly.
    fn nu_cell_mean(&self, cell: &Cell) -> f64 {
        gauss_cell_average(cell, |x| self.nu(x))
    }
}

pub struct UnitWeight {
    pub dim: usize,
}

impl PairWeight for UnitWeight {
    fn dim(&self) -> usize {
        self.dim
    }
    fn weight(&self, _x: Point, _y: Point) -> f64 {
        1.0
    }
    fn nu(&self, _x: Point) -> f64 {
        1.0
    }
    fn far_weight(&self, _x: Point) -> f64 {
        1.0
    }
    fn nu_cell_mean(&self, _cell: &Cell) -> f64 {
        1.0
    }
}

/// Weight view of a coefficient field (realization must already be drawn).
pub struct CoeffWeight<'a> {
    field: &'a CoefficientField,
    mean_mu: f64,
}

impl<'a> CoeffWeight<'a> {
    pub fn new(field: &'a CoefficientField) -> Result<Self> {
        if field.structure.is_random() && field.realization.is_none() {
            return Err(Error::RealizationMissing);
        }
        let mean_mu = if field.structure.is_product() {
            field.mean_mu(&EffectiveQuad::default())?
        } else {
            1.0
        };
        Ok(CoeffWeight { field, mean_mu })
    }
}

impl PairWeight for CoeffWeight<'_> {
    fn dim(&self) -> usize {
        self.field.dim
    }

    fn weight(&self, x: Point, y: Point) -> f64 {
        match &self.field.structure {
            Structure::PeriodicProduct { .. }
            | Structure::RandomProduct { .. }
            | Structure::RandomCheckerboard { .. } => {
                self.field.eval_mu(x).unwrap() * self.field.eval_mu(y).unwrap()
            }
            _ => self.field.eval(x, y).unwrap(),
        }
    }

    fn nu(&self, x: Point) -> f64 {
        if self.field.structure.is_product() {
            self.field.eval_nu(x).unwrap()
        } else {
            1.0
        }
    }

    fn far_weight(&self, x: Point) -> f64 {
        match &self.field.structure {
            Structure::PeriodicProduct { .. }
            | Structure::RandomProduct { .. }
            | Structure::RandomCheckerboard { .. } => {
                self.field.eval_mu(x).unwrap() * self.mean_mu
            }
            // average the eta slot; catalog entries are (x, y)-independent
            // so passing y = x is exact for them
            Structure::PeriodicSymmetric(s) | Structure::RandomSymmetric(s) => {
                let shift = self.field.realization.map(|r| r.shift).unwrap_or([0.0, 0.0]);
                let xi = [
                    x[0] / self.field.epsilon + shift[0],
                    x[1] / self.field.epsilon + shift[1],
                ];
                s.eta_average(x, x, xi)
            }
        }
    }

    /// Piecewise-exact cell average of nu: the 1D panels between the field's
    /// jump lines are integrated by Gauss rules, so two-phase and lattice
    /// coefficients are exact even when the realization shift moves their
    /// jumps inside a cell.
    fn nu_cell_mean(&self, cell: &Cell) -> f64 {
        if !self.field.structure.is_product() {
            return 1.0;
        }
        let axis_panels = |axis: usize| -> Vec<f64> {
            let mut pts = vec![cell.lo[axis]];
            pts.extend(self.field.nu_jumps_on_axis(axis, cell.lo[axis], cell.hi[axis]));
            pts.push(cell.hi[axis]);
            pts
        };
        let px = axis_panels(0);
        match self.field.dim {
            1 => {
                let mut acc = 0.0;
                for w in px.windows(2) {
                    acc += crate::quad::gauss4(|x| self.nu(pt1(x)), w[0], w[1]);
                }
                acc / cell.volume()
            }
            _ => {
                let py = axis_panels(1);
                let mut acc = 0.0;
                for wx in px.windows(2) {
                    for wy in py.windows(2) {
                        let (mx, hx) = (0.5 * (wx[0] + wx[1]), 0.5 * (wx[1] - wx[0]));
                        let (my, hy) = (0.5 * (wy[0] + wy[1]), 0.5 * (wy[1] - wy[0]));
                        let mut panel = 0.0;
                        for &(x0, w0) in GAUSS4.iter() {
                            for &(x1, w1) in GAUSS4.iter() {
                                panel += w0 * w1 * self.nu(pt2(mx + hx * x0, my + hy * x1));
                            }
                        }
                        acc += panel * hx * hy;
                    }
                }
                acc / cell.volume()
            }
        }
    }
}

/// Weight view of a homogenized coefficient.
pub struct EffectiveWeight<'a> {
    pub eff: &'a EffectiveCoefficient,
    pub dim: usize,
}

impl PairWeight for EffectiveWeight<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn weight(&self, x: Point, y: Point) -> f64 {
        self.eff.value_at(x, y)
    }
    fn nu(&self, _x: Point) -> f64 {
        1.0
    }
    fn far_weight(&self, x: Point) -> f64 {
        self.eff.value_at(x, x)
    }
    fn nu_cell_mean(&self, _cell: &Cell) -> f64 {
        1.0
    }
}

/// Assembled matrices for one (epsilon, realization) instance.
pub struct AssembledSystem {
    /// Symmetric form matrix (exactly symmetric: the upper triangle is
    /// computed once and mirrored).
    pub a: DenseMatrix,
    /// Diagonal weighted mass M_ii = h^d * (cell average of nu).
    pub mass: Vec<f64>,
    /// The nu cell averages themselves (1 for symmetric structure).
    pub nu_weights: Vec<f64>,
    /// Right-hand side b_i = f_i * M_ii.
    pub b: Vec<f64>,
    /// Exterior interactions e_i >= 0.
    pub exterior: Vec<f64>,
    pub m: f64,
    pub grid: Grid,
}

impl AssembledSystem {
    /// out = (A + m M) x.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.a.matvec(x, out);
        for i in 0..x.len() {
            out[i] += self.m * self.mass[i] * x[i];
        }
    }

    /// Residual norm ||(A + mM)u - b||.
    pub fn residual_norm(&self, u: &[f64]) -> f64 {
        let mut r = vec![0.0; u.len()];
        self.apply(u, &mut r);
        r.iter().zip(&self.b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

struct PairQuad<'a> {
    kernel: &'a Kernel,
    weight: &'a dyn PairWeight,
    tol: f64,
    max_depth: usize,
}

impl PairQuad<'_> {
    /// Tensor Gauss-Legendre (4 points per axis per cell) of K * W. Only ever
    /// called on pairs with disjoint interiors, so nodes never collide.
    fn gauss_leaf(&self, a: &Cell, b: &Cell) -> f64 {
        let am = a.mid();
        let bm = b.mid();
        let ah = [0.5 * (a.hi[0] - a.lo[0]), 0.5 * (a.hi[1] - a.lo[1])];
        let bh = [0.5 * (b.hi[0] - b.lo[0]), 0.5 * (b.hi[1] - b.lo[1])];
        match a.dim {
            1 => {
                let mut acc = 0.0;
                for &(xq, wx) in GAUSS4.iter() {
                    let x = pt1(am[0] + ah[0] * xq);
                    for &(yq, wy) in GAUSS4.iter() {
                        let y = pt1(bm[0] + bh[0] * yq);
                        acc += wx * wy * self.kernel.eval_pt(x, y) * self.weight.weight(x, y);
                    }
                }
                acc * ah[0] * bh[0]
            }
            _ => {
                let mut acc = 0.0;
                for &(x0, w0) in GAUSS4.iter() {
                    for &(x1, w1) in GAUSS4.iter() {
                        let x = pt2(am[0] + ah[0] * x0, am[1] + ah[1] * x1);
                        for &(y0, w2) in GAUSS4.iter() {
                            for &(y1, w3) in GAUSS4.iter() {
                                let y = pt2(bm[0] + bh[0] * y0, bm[1] + bh[1] * y1);
                                acc += w0 * w1 * w2 * w3
                                    * self.kernel.eval_pt(x, y)
                                    * self.weight.weight(x, y);
                            }
                        }
                    }
                }
                acc * ah[0] * ah[1] * bh[0] * bh[1]
            }
        }
    }

    fn child_pairs(a: &Cell, b: &Cell) -> Vec<(Cell, Cell)> {
        let ac = a.split();
        let bc = b.split();
        let mut out = Vec::with_capacity(ac.len() * bc.len());
        for ca in &ac {
            for cb in &bc {
                out.push((*ca, *cb));
            }
        }
        out
    }

    /// Adaptive integral over a pair with positive gap.
    fn disjoint_root(&self, a: &Cell, b: &Cell, ok: &mut bool) -> f64 {
        let coarse = self.gauss_leaf(a, b);
        let tol_abs = self.tol * coarse.abs().max(f64::MIN_POSITIVE);
        self.refine(a, b, coarse, tol_abs, 0, ok)
    }

    fn refine(&self, a: &Cell, b: &Cell, coarse: f64, tol_abs: f64, depth: usize, ok: &mut bool) -> f64 {
        let children = Self::child_pairs(a, b);
        let vals: Vec<f64> = children.iter().map(|(ca, cb)| self.gauss_leaf(ca, cb)).collect();
        let fine: f64 = vals.iter().sum();
        if (fine - coarse).abs() <= tol_abs {
            return fine;
        }
        if depth + 1 >= self.max_depth {
            *ok = false;
            return fine;
        }
        let child_tol = tol_abs / children.len() as f64;
        children
            .iter()
            .zip(vals)
            .map(|((ca, cb), v)| self.refine(ca, cb, v, child_tol, depth + 1, ok))
            .sum()
    }

    /// Integral over a touching pair: split off disjoint children level by
    /// level; the deferred touching region shrinks self-similarly, so its
    /// remainder is closed by the measured geometric ratio of level sums.
    fn touching(&self, a: &Cell, b: &Cell, ok: &mut bool) -> f64 {
        let mut pairs = vec![(*a, *b)];
        let mut total = 0.0;
        let mut sums: Vec<f64> = Vec::new();
        for level in 0..self.max_depth {
            let mut next = Vec::new();
            let mut s = 0.0;
            for (p, q) in &pairs {
                for (cp, cq) in Self::child_pairs(p, q) {
                    if cp.touches(&cq) {
                        next.push((cp, cq));
                    } else {
                        s += self.disjoint_root(&cp, &cq, ok);
                    }
                }
            }
            total += s;
            sums.push(s);
            if next.is_empty() {
                return total;
            }
            if level >= 3 {
                let r = sums[level] / sums[level - 1];
                let r_prev = sums[level - 1] / sums[level - 2];
                if r > 0.0 && r < 0.98 && r_prev > 0.0 {
                    let tail = s * r / (1.0 - r);
                    let drift = (r - r_prev).abs() * s / ((1.0 - r) * (1.0 - r));
                    if drift <= 0.5 * self.tol * (total + tail).abs() {
                        return total + tail;
                    }
                }
            }
            pairs = next;
        }
        // depth exhausted: close with the last ratio if usable
        let l = sums.len();
        if l >= 2 && sums[l - 1] > 0.0 && sums[l - 2] > 0.0 {
            let r = sums[l - 1] / sums[l - 2];
            if r > 0.0 && r < 0.98 {
                let tail = sums[l - 1] * r / (1.0 - r);
                if tail > self.tol * total.abs() {
                    *ok = false;
                }
                return total + tail;
            }
        }
        *ok = false;
        total
    }

    fn pair(&self, a: &Cell, b: &Cell, ok: &mut bool) -> f64 {
        if a.touches(b) {
            self.touching(a, b, ok)
        } else {
            self.disjoint_root(a, b, ok)
        }
    }
}

/// Ghost boxes tiling [-r_far, r_far]^d minus the computational box, with
/// sizes doubling away from the boundary.
fn ghost_cells(grid: &Grid, r_far: f64) -> Vec<Cell> {
    let l = grid.half_width;
    let h = grid.h();
    let mut out = Vec::new();
    match grid.dim {
        1 => {
            let mut start = l;
            let mut w = h;
            while start < r_far {
                let end = (start + w).min(r_far);
                out.push(Cell::new(1, pt1(start), pt1(end)));
                out.push(Cell::new(1, pt1(-end), pt1(-start)));
                start = end;
                w *= 2.0;
            }
        }
        _ => {
            let mut r = l;
            while r < r_far {
                let rn = (2.0 * r).min(r_far);
                // four strips of the ring [-rn, rn]^2 \ [-r, r]^2
                out.push(Cell::new(2, pt2(-rn, r), pt2(rn, rn)));
                out.push(Cell::new(2, pt2(-rn, -rn), pt2(rn, -r)));
                out.push(Cell::new(2, pt2(-rn, -r), pt2(-r, r)));
                out.push(Cell::new(2, pt2(r, -r), pt2(rn, r)));
                r = rn;
            }
        }
    }
    out
}

/// Per-point tail factor: the kernel mass of the region beyond the far
/// cutoff, seen from x. Analytic in the radial variable for power kernels,
/// closed with a measured tail constant otherwise.
enum TailClosure {
    Power1D { alpha: f64 },
    PowerBall { alpha: f64 },
    Measured { c0: f64, alpha: f64 },
}

impl TailClosure {
    fn factor(&self, x: Point, r_far: f64, dim: usize) -> f64 {
        match self {
            TailClosure::Power1D { alpha } => {
                ((r_far - x[0]).powf(-alpha) + (r_far + x[0]).powf(-alpha)) / alpha
            }
            TailClosure::PowerBall { alpha } => {
                let d = x[0].abs().max(x[1].abs());
                2.0 * std::f64::consts::PI / alpha * (r_far - d).powf(-alpha)
            }
            TailClosure::Measured { c0, alpha } => {
                let d = if dim == 1 { x[0].abs() } else { x[0].abs().max(x[1].abs()) };
                c0 * (r_far - d).powf(-alpha)
            }
        }
    }
}

/// Cell average by a per-cell Gauss rule, matching the projection rule.
fn gauss_cell_average(cell: &Cell, f: impl Fn(Point) -> f64) -> f64 {
    let m = cell.mid();
    let hw = [0.5 * (cell.hi[0] - cell.lo[0]), 0.5 * (cell.hi[1] - cell.lo[1])];
    match cell.dim {
        1 => {
            let mut acc = 0.0;
            for &(xq, wq) in GAUSS4.iter() {
                acc += 0.5 * wq * f(pt1(m[0] + hw[0] * xq));
            }
            acc
        }
        _ => {
            let mut acc = 0.0;
            for &(x0, w0) in GAUSS4.iter() {
                for &(x1, w1) in GAUSS4.iter() {
                    acc += 0.25 * w0 * w1 * f(pt2(m[0] + hw[0] * x0, m[1] + hw[1] * x1));
                }
            }
            acc
        }
    }
}

fn cell_gauss(cell: &Cell, f: impl Fn(Point) -> f64) -> f64 {
    let m = cell.mid();
    let hw = [0.5 * (cell.hi[0] - cell.lo[0]), 0.5 * (cell.hi[1] - cell.lo[1])];
    match cell.dim {
        1 => {
            let mut acc = 0.0;
            for &(xq, wq) in GAUSS4.iter() {
                acc += wq * f(pt1(m[0] + hw[0] * xq));
            }
            acc * hw[0]
        }
        _ => {
            let mut acc = 0.0;
            for &(x0, w0) in GAUSS4.iter() {
                for &(x1, w1) in GAUSS4.iter() {
                    acc += w0 * w1 * f(pt2(m[0] + hw[0] * x0, m[1] + hw[1] * x1));
                }
            }
            acc * hw[0] * hw[1]
        }
    }
}

/// Assemble the form matrix, weighted mass, exterior vector and right-hand
/// side for one instance of the problem (m - L) u = f.
pub fn assemble_system(
    grid: Grid,
    kernel: &Kernel,
    weight: &dyn PairWeight,
    m: f64,
    f: &GridFunction,
    tail: &TailPolicy,
) -> Result<AssembledSystem> {
    if kernel.dim != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, got: kernel.dim });
    }
    if weight.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, got: weight.dim() });
    }
    if f.grid != grid {
        return Err(Error::DimensionMismatch { expected: grid.cell_count(), got: f.values.len() });
    }
    if kernel.alpha >= 1.0 {
        return Err(Error::AlphaNotAssemblable(kernel.alpha));
    }
    if !(tail.tolerance > 0.0 && tail.tolerance <= 1e-4) {
        return Err(Error::BadTailTolerance(tail.tolerance));
    }
    if tail.r_far <= grid.half_width {
        return Err(Error::BadFarCutoff { r_far: tail.r_far, half_width: grid.half_width });
    }
    if !(m > 0.0) {
        return Err(Error::Invalid(format!("mass coefficient m must be positive, got {m}")));
    }

    let n = grid.cell_count();
    let engine = PairQuad { kernel, weight, tol: tail.tolerance, max_depth: tail.max_depth };

    // upper-triangle pair integrals, one owner per row
    let rows: Vec<(Vec<f64>, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ci = grid.cell(i);
            let mut ok = true;
            let vals: Vec<f64> =
                ((i + 1)..n).map(|j| -engine.pair(&ci, &grid.cell(j), &mut ok)).collect();
            (vals, ok)
        })
        .collect();

    if rows.iter().any(|(_, ok)| !ok) {
        return Err(Error::QuadratureBudget("interior pair integrals".into()));
    }

    let mut a = DenseMatrix::zeros(n);
    for (i, (vals, _)) in rows.iter().enumerate() {
        for (off, v) in vals.iter().enumerate() {
            a.set(i, i + 1 + off, *v);
        }
    }
    a.mirror_upper();

    // exterior interactions: ghost tiles out to r_far plus the analytic tail
    let ghosts = ghost_cells(&grid, tail.r_far);
    let closure = if kernel.is_pure_power() {
        if grid.dim == 1 {
            TailClosure::Power1D { alpha: kernel.alpha }
        } else {
            TailClosure::PowerBall { alpha: kernel.alpha }
        }
    } else {
        let probe_r = 0.5 * tail.r_far;
        let mass = kernel.tail_mass([0.0, 0.0], probe_r, 1e-10)?;
        TailClosure::Measured { c0: probe_r.powf(kernel.alpha) * mass, alpha: kernel.alpha }
    };

    let ext: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ci = grid.cell(i);
            let mut ok = true;
            let mut e = 0.0;
            for g in &ghosts {
                e += engine.pair(&ci, g, &mut ok);
            }
            e += cell_gauss(&ci, |x| {
                weight.far_weight(x) * closure.factor(x, tail.r_far, grid.dim)
            });
            (e, ok)
        })
        .collect();

    if ext.iter().any(|(_, ok)| !ok) {
        return Err(Error::QuadratureBudget("exterior interactions".into()));
    }
    let exterior: Vec<f64> = ext.into_iter().map(|(e, _)| e).collect();

    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if j != i {
                s += a.get(i, j).abs();
            }
        }
        a.set(i, i, s + exterior[i]);
    }

    let hv = grid.cell_volume();
    let nu_weights: Vec<f64> = (0..n).map(|i| weight.nu_cell_mean(&grid.cell(i))).collect();
    let mass: Vec<f64> = nu_weights.iter().map(|w| hv * w).collect();
    let b: Vec<f64> = f.values.iter().zip(&mass).map(|(fi, mi)| fi * mi).collect();

    Ok(AssembledSystem { a, mass, nu_weights, b, exterior, m, grid })
}

/// Assemble with the pure-power kernel and unit weight: the discrete
/// Gagliardo energy matrix.
pub fn assemble_unit(grid: Grid, alpha: f64, tail: &TailPolicy) -> Result<AssembledSystem> {
    let kernel = Kernel::fractional(grid.dim, alpha)?;
    let unit = UnitWeight { dim: grid.dim };
    let zero = GridFunction::zeros(grid);
    assemble_system(grid, &kernel, &unit, 1.0, &zero, tail)
}

/// Squared Gagliardo seminorm of u at order s = alpha/2 under zero extension:
/// the double integral over both orderings, i.e. twice the quadratic form.
pub fn gagliardo_seminorm_sq(grid: Grid, u: &GridFunction, alpha: f64, tail: &TailPolicy) -> Result<f64> {
    let sys = assemble_unit(grid, alpha, tail)?;
    Ok(seminorm_sq_from_unit(&sys, u))
}

/// Same seminorm reusing an already assembled unit system.
pub fn seminorm_sq_from_unit(unit_sys: &AssembledSystem, u: &GridFunction) -> f64 {
    2.0 * unit_sys.a.quadratic_form(&u.values)
}

/// Gagliardo p-seminorm (to the p-th power) from a unit system:
/// the pairwise weights are the kernel integrals -a_ij, exterior pairs
/// contribute |u_i|^p with weight e_i, and both orderings are counted.
pub fn gagliardo_p_from_unit(unit_sys: &AssembledSystem, u: &GridFunction, p: f64) -> f64 {
    let n = unit_sys.a.n();
    let vals = &u.values;
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = -unit_sys.a.get(i, j);
            acc += w * (vals[j] - vals[i]).abs().powf(p);
        }
        acc += unit_sys.exterior[i] * vals[i].abs().powf(p);
    }
    2.0 * acc
}
