//! Low-dimensional geometry helpers shared by the kernel, coefficient and
//! assembly modules. Points are stored as `[f64; 2]`; for `dim == 1` the
//! second component is zero and must be ignored by all norms.

/// A point in R^1 or R^2. For one-dimensional problems the second slot is 0.
pub type Point = [f64; 2];

pub fn pt1(x: f64) -> Point {
    [x, 0.0]
}

pub fn pt2(x: f64, y: f64) -> Point {
    [x, y]
}

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn dot(dim: usize, a: Point, b: Point) -> f64 {
    match dim {
        1 => a[0] * b[0],
        _ => a[0] * b[0] + a[1] * b[1],
    }
}

pub fn norm(dim: usize, a: Point) -> f64 {
    match dim {
        1 => a[0].abs(),
        _ => a[0].hypot(a[1]),
    }
}

pub fn dist(dim: usize, a: Point, b: Point) -> f64 {
    norm(dim, sub(a, b))
}

/// Surface measure of the unit sphere S^{d-1}: 2 points in d = 1, 2*pi in d = 2.
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI,
    }
}

/// An axis-aligned box (interval in 1D, rectangle in 2D).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub lo: Point,
    pub hi: Point,
    pub dim: usize,
}

impl Cell {
    pub fn new(dim: usize, lo: Point, hi: Point) -> Self {
        Cell { lo, hi, dim }
    }

    pub fn mid(&self) -> Point {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    pub fn widths(&self) -> Point {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1]]
    }

    pub fn volume(&self) -> f64 {
        let w = self.widths();
        match self.dim {
            1 => w[0],
            _ => w[0] * w[1],
        }
    }

    pub fn diameter(&self) -> f64 {
        norm(self.dim, self.widths())
    }

    /// Componentwise distance between two boxes; zero when they touch or overlap.
    pub fn gap(&self, other: &Cell) -> f64 {
        let mut acc = [0.0, 0.0];
        for k in 0..self.dim {
            let g = (self.lo[k] - other.hi[k]).max(other.lo[k] - self.hi[k]).max(0.0);
            acc[k] = g;
        }
        norm(self.dim, acc)
    }

    /// True when the closures intersect but the interiors are disjoint
    /// (grid cells never overlap, so this detects shared faces or corners).
    pub fn touches(&self, other: &Cell) -> bool {
        self.gap(other) == 0.0
    }

    /// Split into 2^d congruent children.
    pub fn split(&self) -> Vec<Cell> {
        let m = self.mid();
        match self.dim {
            1 => vec![
                Cell::new(1, self.lo, [m[0], self.hi[1]]),
                Cell::new(1, [m[0], self.lo[1]], self.hi),
            ],
            _ => vec![
                Cell::new(2, self.lo, m),
                Cell::new(2, [m[0], self.lo[1]], [self.hi[0], m[1]]),
                Cell::new(2, [self.lo[0], m[1]], [m[0], self.hi[1]]),
                Cell::new(2, m, self.hi),
            ],
        }
    }
}
