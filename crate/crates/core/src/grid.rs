//! Uniform cell partitions of the truncation box and piecewise-constant
//! functions on them, extended by zero outside the box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{norm, pt1, pt2, sub, Cell, Point};
use crate::quad::GAUSS4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    /// Box half-width L; the box is [-L, L]^d.
    pub half_width: f64,
    /// Cells per axis.
    pub n: usize,
}

/// Build a uniform grid on [-L, L]^d.
pub fn build_grid(dim: usize, half_width: f64, n: usize) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    if !(half_width > 0.0) {
        return Err(Error::Invalid(format!("box half-width must be positive, got {half_width}")));
    }
    Ok(Grid { dim, half_width, n })
}

impl Grid {
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn cell_count(&self) -> usize {
        match self.dim {
            1 => self.n,
            _ => self.n * self.n,
        }
    }

    pub fn index_to_multi(&self, idx: usize) -> (usize, usize) {
        match self.dim {
            1 => (idx, 0),
            _ => (idx % self.n, idx / self.n),
        }
    }

    pub fn cell(&self, idx: usize) -> Cell {
        let h = self.h();
        let (ix, iy) = self.index_to_multi(idx);
        let lo0 = -self.half_width + ix as f64 * h;
        match self.dim {
            1 => Cell::new(1, pt1(lo0), pt1(lo0 + h)),
            _ => {
                let lo1 = -self.half_width + iy as f64 * h;
                Cell::new(2, pt2(lo0, lo1), pt2(lo0 + h, lo1 + h))
            }
        }
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        self.cell(idx).mid()
    }
}

/// Closed catalog of right-hand sides and test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionSpec {
    GaussianBump { center: Vec<f64>, width: f64 },
    CosineBump { center: Vec<f64>, width: f64 },
    Indicator { lo: Vec<f64>, hi: Vec<f64> },
    Zero,
}

impl FunctionSpec {
    fn center_pt(center: &[f64]) -> Point {
        match center.len() {
            0 => [0.0, 0.0],
            1 => pt1(center[0]),
            _ => pt2(center[0], center[1]),
        }
    }

    pub fn eval(&self, dim: usize, p: Point) -> f64 {
        match self {
            FunctionSpec::Zero => 0.0,
            FunctionSpec::GaussianBump { center, width } => {
                let r = norm(dim, sub(p, Self::center_pt(center)));
                (-r * r / (2.0 * width * width)).exp()
            }
            FunctionSpec::CosineBump { center, width } => {
                let r = norm(dim, sub(p, Self::center_pt(center)));
                if r >= *width {
                    0.0
                } else {
                    let c = (std::f64::consts::PI * r / (2.0 * width)).cos();
                    c * c
                }
            }
            FunctionSpec::Indicator { lo, hi } => {
                for k in 0..dim {
                    if p[k] < lo[k] || p[k] >= hi[k] {
                        return 0.0;
                    }
                }
                1.0
            }
        }
    }

    /// Radius beyond which the function is (numerically) zero; used for the
    /// support warning. Gaussians are cut at four widths.
    pub fn support_radius(&self, dim: usize) -> f64 {
        match self {
            FunctionSpec::Zero => 0.0,
            FunctionSpec::GaussianBump { center, width } => {
                norm(dim, Self::center_pt(center)) + 4.0 * width
            }
            FunctionSpec::CosineBump { center, width } => {
                norm(dim, Self::center_pt(center)) + width
            }
            FunctionSpec::Indicator { lo, hi } => {
                let a = Self::center_pt(lo);
                let b = Self::center_pt(hi);
                norm(dim, a).max(norm(dim, b))
            }
        }
    }
}

/// A piecewise-constant function on a grid, zero outside the box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: vec![0.0; grid.cell_count()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::DimensionMismatch { expected: grid.cell_count(), got: values.len() });
        }
        Ok(GridFunction { grid, values })
    }

    /// L^2(R^d) norm under the zero-extension convention.
    pub fn l2_norm(&self) -> f64 {
        let hv = self.grid.cell_volume();
        (hv * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Plain L^2 inner product.
    pub fn l2_inner(&self, other: &GridFunction) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let hv = self.grid.cell_volume();
        hv * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// L^p norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let hv = self.grid.cell_volume();
        (hv * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        debug_assert_eq!(self.grid, other.grid);
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }
}

/// Project a catalog function onto the grid by per-cell Gauss rules
/// (4-point in 1D, 4x4 in 2D), i.e. cell averages.
pub fn project(grid: Grid, fspec: &FunctionSpec) -> GridFunction {
    let support = fspec.support_radius(grid.dim);
    if support > grid.half_width {
        log::warn!(
            "source support radius {support:.3} exceeds the box half-width {}; \
             mass outside the box is dropped by the zero-extension convention",
            grid.half_width
        );
    }
    let mut out = GridFunction::zeros(grid);
    for idx in 0..grid.cell_count() {
        let cell = grid.cell(idx);
        let mid = cell.mid();
        let hw = [0.5 * (cell.hi[0] - cell.lo[0]), 0.5 * (cell.hi[1] - cell.lo[1])];
        let mut acc = 0.0;
        match grid.dim {
            1 => {
                for &(xq, wq) in GAUSS4.iter() {
                    acc += 0.5 * wq * fspec.eval(1, pt1(mid[0] + hw[0] * xq));
                }
            }
            _ => {
                for &(xq, wq) in GAUSS4.iter() {
                    for &(yq, wyq) in GAUSS4.iter() {
                        acc += 0.25
                            * wq
                            * wyq
                            * fspec.eval(2, pt2(mid[0] + hw[0] * xq, mid[1] + hw[1] * yq));
                    }
                }
            }
        }
        out.values[idx] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::quad;

    #[test]
    fn grid_examples() {
        let g = build_grid(1, 1.0, 4).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.cell(0).lo[0], -1.0);
        assert_eq!(g.cell(0).hi[0], -0.5);
        assert_eq!(g.cell(3).hi[0], 1.0);

        let g2 = build_grid(2, 1.0, 2).unwrap();
        assert_eq!(g2.cell_count(), 4);
        assert_relative_eq!(g2.cell(0).volume(), 1.0);
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(matches!(build_grid(1, 1.0, 0), Err(Error::EmptyGrid)));
    }

    #[test]
    fn zero_projection() {
        let g = build_grid(1, 1.0, 8).unwrap();
        let f = project(g, &FunctionSpec::Zero);
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn aligned_indicator_projection() {
        let g = build_grid(1, 1.0, 4).unwrap();
        let f = project(g, &FunctionSpec::Indicator { lo: vec![0.0], hi: vec![1.0] });
        let expected = [0.0, 0.0, 1.0, 1.0];
        for (v, e) in f.values.iter().zip(expected) {
            assert_relative_eq!(*v, e, epsilon = 1e-15);
        }
    }

    // The projected cell averages must preserve the integral of the bump to
    // 1e-6 relative against an adaptive quadrature oracle.
    #[test]
    fn gaussian_projection_preserves_mass() {
        let g = build_grid(1, 1.0, 256).unwrap();
        let spec = FunctionSpec::GaussianBump { center: vec![0.0], width: 0.2 };
        let f = project(g, &spec);
        let grid_mass: f64 = f.values.iter().sum::<f64>() * g.h();
        let (oracle, ok) =
            quad::adaptive(|x| (-x * x / (2.0 * 0.04)).exp(), -1.0, 1.0, 1e-13, 50);
        assert!(ok);
        assert_relative_eq!(grid_mass, oracle, max_relative = 1e-6);
    }

    #[test]
    fn l2_norm_of_indicator() {
        let g = build_grid(1, 2.0, 8).unwrap();
        let f = project(g, &FunctionSpec::Indicator { lo: vec![0.0], hi: vec![1.0] });
        assert_relative_eq!(f.l2_norm(), 1.0, max_relative = 1e-12);
    }
}
