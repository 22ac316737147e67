//! Uniform Dirichlet grids on the unit interval and unit square.

use crate::Error;

/// `n` interior points per axis, mesh width `h = 1/(n+1)`, homogeneous
/// Dirichlet boundary. Unknowns are interior values only, ordered
/// lexicographically (`x` fastest in 2d).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn line(n: usize) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidParameter { what: "grid needs n >= 1" });
        }
        Ok(Grid { dim: 1, n })
    }

    pub fn square(n: usize) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidParameter { what: "grid needs n >= 1" });
        }
        Ok(Grid { dim: 2, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Interior points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    /// Total number of unknowns.
    pub fn unknowns(&self) -> usize {
        match self.dim {
            1 => self.n,
            _ => self.n * self.n,
        }
    }

    /// Number of forward-difference edges per axis.
    ///
    /// In 1d there are `n+1` differences (zero extension at both ends). In 2d
    /// each of the `n` grid lines per direction carries `n+1` differences.
    pub fn edges_per_axis(&self) -> usize {
        match self.dim {
            1 => self.n + 1,
            _ => (self.n + 1) * self.n,
        }
    }

    /// Coordinate of interior point `i` (1d) with `i` in `0..n`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h()
    }

    /// Lexicographic index of interior point `(i, j)` in 2d.
    pub fn idx2(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }
}
