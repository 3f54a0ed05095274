//! Dense symmetric matrix storage for the assembled nonlocal form.
//!
//! The coupling is inherently dense (every cell interacts with every cell),
//! and desk-scale problems stay below ~4096 unknowns, so a flat row-major
//! buffer beats any sparse machinery.

use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows_mut(&mut self) -> rayon::slice::ChunksMut<'_, f64> {
        self.data.par_chunks_mut(self.n)
    }

    /// out = self * x. Each output entry is a sequentially accumulated row dot
    /// product, so the result is bit-identical for any worker count.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        let n = self.n;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            *o = acc;
        });
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) != self.get(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// Mirror the strict upper triangle onto the lower one.
    pub fn mirror_upper(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.get(i, j);
                self.set(j, i, v);
            }
        }
    }

    /// x^T A x, accumulated in a fixed order.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = self.row(i);
            let mut ri = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                ri += a * b;
            }
            acc += x[i] * ri;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_form() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 2.0);
        a.set(0, 1, -1.0);
        a.set(1, 0, -1.0);
        a.set(1, 1, 2.0);
        let mut out = vec![0.0; 2];
        a.matvec(&[1.0, 2.0], &mut out);
        assert_eq!(out, vec![0.0, 3.0]);
        assert_eq!(a.quadratic_form(&[1.0, 2.0]), 6.0);
        assert!(a.is_symmetric());
    }
}
