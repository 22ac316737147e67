//! Small dense linear algebra: enough LU to invert surrogates.
//!
//! Every matrix in this crate is a frozen Jacobian, a Stokes/Gram block, or a
//! discrete Laplacian, so sizes stay in the hundreds and a plain partial-pivot
//! LU is both adequate and easy to audit. The factorization doubles as the
//! rank-deficiency detector: the pivot-ratio condition estimate is compared
//! against `1/eps`.

use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::Error;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = s;
        }
        m
    }

    /// Builds from a row-major closure.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Builds from nested rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// `self + s * other`, entrywise.
    pub fn add_scaled(&self, other: &DenseMatrix, s: f64) -> Result<DenseMatrix, Error> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += s * v;
        }
        Ok(out)
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }
}

/// LU factors with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    cond_estimate: f64,
}

impl LuFactors {
    /// Factors `a`. Fails with [`Error::SingularJacobian`] when a pivot
    /// vanishes or the pivot-ratio condition estimate exceeds `1/eps`.
    pub fn factor(a: &DenseMatrix) -> Result<Self, Error> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut max_pivot = 0.0f64;
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            let mut p = k;
            let mut best = fp::abs(lu[k * n + k]);
            for i in k + 1..n {
                let cand = fp::abs(lu[i * n + k]);
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let pivot = lu[k * n + k];
            let mag = fp::abs(pivot);
            max_pivot = fp::max(max_pivot, mag);
            min_pivot = fp::min(min_pivot, mag);
            if mag == 0.0 {
                return Err(Error::SingularJacobian { cond: f64::INFINITY });
            }
            for i in k + 1..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                for j in k + 1..n {
                    lu[i * n + j] -= l * lu[k * n + j];
                }
            }
        }

        let cond_estimate = if min_pivot > 0.0 { max_pivot / min_pivot } else { f64::INFINITY };
        if !(cond_estimate < 1.0 / f64::EPSILON) {
            return Err(Error::SingularJacobian { cond: cond_estimate });
        }
        Ok(LuFactors { n, lu, piv, cond_estimate })
    }

    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, Error> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.len() });
        }
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Solves a constant-coefficient symmetric tridiagonal system
/// `diag * x_i + off * (x_{i-1} + x_{i+1}) = b_i` by the Thomas algorithm.
///
/// `diag` must dominate enough for the elimination to stay positive; the
/// discrete Dirichlet Laplacian (diag 2, off -1) does.
pub fn solve_tridiag_const(diag: f64, off: f64, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    c[0] = off / diag;
    d[0] = b[0] / diag;
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c[i] = off / m;
        d[i] = (b[i] - off * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_roundtrip() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let lu = LuFactors::factor(&a).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]).unwrap();
        let b = a.matvec(&x);
        for (bi, want) in b.iter().zip([1.0, 2.0, 3.0]) {
            assert!((bi - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(LuFactors::factor(&a), Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn tridiag_matches_dense() {
        let n = 7;
        let a = DenseMatrix::from_fn(n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sin()).collect();
        let dense = LuFactors::factor(&a).unwrap().solve(&b).unwrap();
        let fast = solve_tridiag_const(2.0, -1.0, &b);
        for (u, v) in dense.iter().zip(&fast) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
