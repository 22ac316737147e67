//! Finite-dimensional normed spaces, their duals, and duality maps.
//!
//! Two primal norm families are supported: plain `l^p` on coordinate vectors
//! (`1 < p < inf`; the endpoints have no usable duality map and are rejected)
//! and a discrete Sobolev norm measuring the `L^p` size of the
//! forward-difference gradient on a Dirichlet grid. Dual objects reuse the
//! same entry arrays: the pairing between a space and its dual is always the
//! plain Euclidean sum `sum_i x*_i x_i`, and dual norms carry the conjugate
//! exponent `q = p/(p-1)`.
//!
//! The duality map `J` satisfies, exactly up to roundoff,
//!
//! ```text
//! <x, J(x)> = ||x||^2        and        ||J(x)||_dual = ||x||.
//! ```
//!
//! On `l^p` it is the weighted sign map
//! `J(x)_i = ||x||^(2-p) |x_i|^(p-2) x_i` (zero where `x_i` is zero); on the
//! discrete Sobolev space it is transported through the gradient: apply the
//! weighted `l^p` map edge by edge to the forward differences, then apply the
//! exact transpose of the difference operator.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::grid::Grid;
use crate::linalg::{solve_tridiag_const, DenseMatrix, LuFactors};
use crate::Error;

/// Norm family of a [`SpaceDescriptor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `(sum |x_i|^p)^(1/p)` on raw coordinates.
    Lp { p: f64 },
    /// `L^p` norm of the forward-difference gradient on `grid`, with zero
    /// extension at the Dirichlet boundary and `h^dim` cell weights. Each
    /// axis contributes its own set of edge differences.
    SobolevW1p { p: f64, grid: Grid },
    /// Norm for residuals living in the dual of the matching
    /// [`NormKind::SobolevW1p`] space. Exact for `p = 2` (energy norm of the
    /// inverse discrete Laplacian); for other `p` the `h`-weighted conjugate
    /// `L^q` norm is used, which bounds the true dual norm from above, so
    /// solver stopping criteria remain sound.
    SobolevDual { p: f64, grid: Grid },
}

fn check_exponent(p: f64) -> Result<(), Error> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::UnsupportedNorm { what: "exponent must satisfy 1 < p < inf" });
    }
    Ok(())
}

/// Dimension plus norm family. The pairing convention is global (Euclidean
/// sum), so this is all the information a space needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceDescriptor {
    dim: usize,
    norm: NormKind,
}

impl SpaceDescriptor {
    pub fn lp(dim: usize, p: f64) -> Result<Self, Error> {
        check_exponent(p)?;
        if dim == 0 {
            return Err(Error::InvalidParameter { what: "space needs dim >= 1" });
        }
        Ok(SpaceDescriptor { dim, norm: NormKind::Lp { p } })
    }

    /// `l^2` shorthand.
    pub fn euclidean(dim: usize) -> Self {
        SpaceDescriptor { dim: dim.max(1), norm: NormKind::Lp { p: 2.0 } }
    }

    pub fn sobolev(p: f64, grid: Grid) -> Result<Self, Error> {
        check_exponent(p)?;
        Ok(SpaceDescriptor { dim: grid.unknowns(), norm: NormKind::SobolevW1p { p, grid } })
    }

    pub fn sobolev_dual(p: f64, grid: Grid) -> Result<Self, Error> {
        check_exponent(p)?;
        Ok(SpaceDescriptor { dim: grid.unknowns(), norm: NormKind::SobolevDual { p, grid } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    /// The descriptor of the dual space, where representable: conjugate
    /// exponent for `l^p`, the dual-residual norm for the Sobolev space.
    pub fn dual(&self) -> Result<SpaceDescriptor, Error> {
        match self.norm {
            NormKind::Lp { p } => SpaceDescriptor::lp(self.dim, conjugate(p)),
            NormKind::SobolevW1p { p, grid } => SpaceDescriptor::sobolev_dual(p, grid),
            NormKind::SobolevDual { .. } => {
                Err(Error::UnsupportedNorm { what: "dual of a dual-residual space" })
            }
        }
    }

    /// True when `other` is the primal Sobolev space this descriptor is the
    /// declared dual of.
    pub fn is_dual_of(&self, other: &SpaceDescriptor) -> bool {
        match (self.norm, other.norm) {
            (NormKind::SobolevDual { p, grid }, NormKind::SobolevW1p { p: q, grid: g }) => {
                p == q && grid == g
            }
            _ => false,
        }
    }
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_finite(entries: &[f64]) -> Result<(), Error> {
    for (index, v) in entries.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry { index });
        }
    }
    Ok(())
}

/// Forward differences `(v_b - v_a)/h` over all edges of `grid`, axis blocks
/// concatenated. Boundary values are zero.
///
/// 1d: edge `j` (`0..=n`) joins nodes `j-1` and `j`. 2d, axis 0: row `j`
/// contributes edges `i = 0..=n` at block offset `j*(n+1)`; axis 1 mirrors
/// with columns, offset by `n*(n+1)`.
pub(crate) fn forward_differences(grid: Grid, v: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.h();
    let mut out = vec![0.0; grid.dim() * grid.edges_per_axis()];
    match grid.dim() {
        1 => {
            for j in 0..=n {
                let lo = if j == 0 { 0.0 } else { v[j - 1] };
                let hi = if j == n { 0.0 } else { v[j] };
                out[j] = (hi - lo) / h;
            }
        }
        _ => {
            let stride = n + 1;
            for j in 0..n {
                for i in 0..=n {
                    let lo = if i == 0 { 0.0 } else { v[grid.idx2(i - 1, j)] };
                    let hi = if i == n { 0.0 } else { v[grid.idx2(i, j)] };
                    out[j * stride + i] = (hi - lo) / h;
                }
            }
            let off = n * stride;
            for i in 0..n {
                for j in 0..=n {
                    let lo = if j == 0 { 0.0 } else { v[grid.idx2(i, j - 1)] };
                    let hi = if j == n { 0.0 } else { v[grid.idx2(i, j)] };
                    out[off + i * stride + j] = (hi - lo) / h;
                }
            }
        }
    }
    out
}

/// Exact transpose of [`forward_differences`]: `<transpose(w), v> = <w, D v>`
/// holds to the last bit for every `v`.
pub(crate) fn difference_transpose(grid: Grid, w: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.h();
    let mut out = vec![0.0; grid.unknowns()];
    match grid.dim() {
        1 => {
            for i in 0..n {
                out[i] = (w[i] - w[i + 1]) / h;
            }
        }
        _ => {
            let stride = n + 1;
            for j in 0..n {
                for i in 0..n {
                    out[grid.idx2(i, j)] += (w[j * stride + i] - w[j * stride + i + 1]) / h;
                }
            }
            let off = n * stride;
            for i in 0..n {
                for j in 0..n {
                    out[grid.idx2(i, j)] +=
                        (w[off + i * stride + j] - w[off + i * stride + j + 1]) / h;
                }
            }
        }
    }
    out
}

fn lp_norm(entries: &[f64], p: f64, weight: f64) -> f64 {
    if p == 2.0 {
        let mut acc = 0.0;
        for v in entries {
            acc += v * v;
        }
        return fp::sqrt(weight * acc);
    }
    let mut acc = 0.0;
    for v in entries {
        acc += fp::powf(fp::abs(*v), p);
    }
    fp::powf(weight * acc, 1.0 / p)
}

/// Weighted `l^p` duality image computed in place:
/// `out_i = scale * w * |e_i|^(p-2) e_i` with `scale = norm^(2-p)`.
fn lp_duality_entries(entries: &[f64], p: f64, weight: f64, norm: f64) -> Vec<f64> {
    let mut out = vec![0.0; entries.len()];
    if norm == 0.0 {
        return out;
    }
    if p == 2.0 {
        for (o, v) in out.iter_mut().zip(entries) {
            *o = weight * v;
        }
        return out;
    }
    let scale = fp::powf(norm, 2.0 - p);
    for (o, v) in out.iter_mut().zip(entries) {
        if *v != 0.0 {
            let mag = fp::powf(fp::abs(*v), p - 1.0);
            *o = scale * weight * if *v < 0.0 { -mag } else { mag };
        }
    }
    out
}

fn weight(grid: Grid) -> f64 {
    let h = grid.h();
    match grid.dim() {
        1 => h,
        _ => h * h,
    }
}

fn norm_of(desc: &SpaceDescriptor, entries: &[f64]) -> Result<f64, Error> {
    check_finite(entries)?;
    match desc.norm {
        NormKind::Lp { p } => Ok(lp_norm(entries, p, 1.0)),
        NormKind::SobolevW1p { p, grid } => {
            let e = forward_differences(grid, entries);
            Ok(lp_norm(&e, p, weight(grid)))
        }
        NormKind::SobolevDual { p, grid } => sobolev_dual_norm(p, grid, entries),
    }
}

/// `sup <g, v> / ||v||_W1p`. Exact energy norm for `p = 2`; the weighted
/// conjugate-exponent upper bound otherwise.
fn sobolev_dual_norm(p: f64, grid: Grid, g: &[f64]) -> Result<f64, Error> {
    if p == 2.0 {
        let z = match grid.dim() {
            1 => {
                // L = tridiag(-1,2,-1)/h, so L^-1 g = h * T^-1 g.
                let mut z = solve_tridiag_const(2.0, -1.0, g);
                for v in &mut z {
                    *v *= grid.h();
                }
                z
            }
            _ => {
                let lap = undivided_laplacian_2d(grid);
                LuFactors::factor(&lap)
                    .expect("discrete Dirichlet Laplacian is positive definite")
                    .solve(g)?
            }
        };
        let mut acc = 0.0;
        for (gi, zi) in g.iter().zip(&z) {
            acc += gi * zi;
        }
        // Symmetric positive definite quadratic form; clamp roundoff.
        return Ok(fp::sqrt(fp::max(acc, 0.0)));
    }
    let q = conjugate(p);
    let w = weight(grid);
    // Treat g as the weighted representer of a function: ghat = g / h^dim.
    let mut acc = 0.0;
    for v in g {
        acc += fp::powf(fp::abs(*v) / w, q);
    }
    Ok(fp::powf(w * acc, 1.0 / q))
}

/// Undivided 5-point Dirichlet Laplacian: `v^T L v = sum_edges (dv)^2`.
fn undivided_laplacian_2d(grid: Grid) -> DenseMatrix {
    let n = grid.n();
    let mut m = DenseMatrix::zeros(n * n);
    for j in 0..n {
        for i in 0..n {
            let r = grid.idx2(i, j);
            m.set(r, r, 4.0);
            if i > 0 {
                m.set(r, grid.idx2(i - 1, j), -1.0);
            }
            if i + 1 < n {
                m.set(r, grid.idx2(i + 1, j), -1.0);
            }
            if j > 0 {
                m.set(r, grid.idx2(i, j - 1), -1.0);
            }
            if j + 1 < n {
                m.set(r, grid.idx2(i, j + 1), -1.0);
            }
        }
    }
    m
}

/// Element of a primal space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    space: SpaceDescriptor,
    entries: Vec<f64>,
}

impl Vector {
    pub fn new(space: SpaceDescriptor, entries: Vec<f64>) -> Result<Self, Error> {
        if entries.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: entries.len() });
        }
        Ok(Vector { space, entries })
    }

    pub fn zeros(space: SpaceDescriptor) -> Self {
        let entries = vec![0.0; space.dim()];
        Vector { space, entries }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn norm(&self) -> Result<f64, Error> {
        norm_of(&self.space, &self.entries)
    }

    /// `J(self)`; see the module docs for the identities it satisfies.
    pub fn duality_map(&self) -> Result<DualVector, Error> {
        check_finite(&self.entries)?;
        let entries = match self.space.norm {
            NormKind::Lp { p } => {
                let n = lp_norm(&self.entries, p, 1.0);
                lp_duality_entries(&self.entries, p, 1.0, n)
            }
            NormKind::SobolevW1p { p, grid } => {
                let e = forward_differences(grid, &self.entries);
                let n = lp_norm(&e, p, weight(grid));
                let w = lp_duality_entries(&e, p, weight(grid), n);
                difference_transpose(grid, &w)
            }
            NormKind::SobolevDual { .. } => {
                return Err(Error::UnsupportedNorm {
                    what: "duality map of a dual-residual space",
                })
            }
        };
        Ok(DualVector { space: self.space.clone(), entries })
    }

    pub fn sub(&self, rhs: &Vector) -> Result<Vector, Error> {
        self.add_scaled(rhs, -1.0)
    }

    pub fn add(&self, rhs: &Vector) -> Result<Vector, Error> {
        self.add_scaled(rhs, 1.0)
    }

    pub fn add_scaled(&self, rhs: &Vector, s: f64) -> Result<Vector, Error> {
        if rhs.entries.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                got: rhs.entries.len(),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(Vector { space: self.space.clone(), entries })
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector {
            space: self.space.clone(),
            entries: self.entries.iter().map(|v| s * v).collect(),
        }
    }

    pub fn dist(&self, rhs: &Vector) -> Result<f64, Error> {
        self.sub(rhs)?.norm()
    }
}

/// Element of a dual space, normed by the conjugate norm of its descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    space: SpaceDescriptor,
    entries: Vec<f64>,
}

impl DualVector {
    pub fn new(space: SpaceDescriptor, entries: Vec<f64>) -> Result<Self, Error> {
        if entries.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: entries.len() });
        }
        Ok(DualVector { space, entries })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Conjugate norm: `l^q` for an `l^p` descriptor, the dual-residual norm
    /// for a Sobolev descriptor.
    pub fn dual_norm(&self) -> Result<f64, Error> {
        check_finite(&self.entries)?;
        match self.space.norm {
            NormKind::Lp { p } => Ok(lp_norm(&self.entries, conjugate(p), 1.0)),
            NormKind::SobolevW1p { p, grid } => sobolev_dual_norm(p, grid, &self.entries),
            NormKind::SobolevDual { p, grid } => {
                // Dual of the dual in the reflexive finite-dim setting.
                let desc = SpaceDescriptor::sobolev(p, grid)?;
                norm_of(&desc, &self.entries)
            }
        }
    }
}

/// Euclidean pairing `sum_i g_i x_i`. The only compatibility requirement is
/// equal dimension; finiteness of both sides is enforced.
pub fn pair(g: &DualVector, x: &Vector) -> Result<f64, Error> {
    if g.entries.len() != x.entries.len() {
        return Err(Error::DimensionMismatch {
            expected: x.entries.len(),
            got: g.entries.len(),
        });
    }
    check_finite(&g.entries)?;
    check_finite(&x.entries)?;
    let mut acc = 0.0;
    for (a, b) in g.entries.iter().zip(&x.entries) {
        acc += a * b;
    }
    Ok(acc)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Scalar coefficient function with a monotonicity tag.
///
/// The tag asserts that `t -> phi(t) * t` is nondecreasing, which is what the
/// diagonal surrogate inversion relies on for bracketing.
#[derive(Clone)]
pub struct ScalarFunction {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    monotone: bool,
}

impl core::fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ScalarFunction").field("monotone", &self.monotone).finish()
    }
}

impl ScalarFunction {
    pub fn one() -> Self {
        ScalarFunction { f: Arc::new(|_| 1.0), monotone: true }
    }

    pub fn constant(c: f64) -> Self {
        ScalarFunction { f: Arc::new(move |_| c), monotone: c >= 0.0 }
    }

    /// `phi(t) = c0 |t|^rho / (|t|^sigma + c1)` with `rho, sigma >= 1`,
    /// `sigma >= rho`, `c0, c1 >= 0`. Evaluated on the magnitude so that
    /// `phi(t) * t` stays odd. `t -> phi(t) t` is nondecreasing exactly when
    /// `sigma <= rho + 1`.
    pub fn rational(c0: f64, c1: f64, rho: f64, sigma: f64) -> Result<Self, Error> {
        if !(rho >= 1.0 && sigma >= rho && c0 >= 0.0 && c1 >= 0.0) {
            return Err(Error::InvalidParameter {
                what: "rational coefficient needs rho >= 1, sigma >= rho, c0, c1 >= 0",
            });
        }
        let monotone = sigma <= rho + 1.0;
        let f = move |t: f64| {
            let a = fp::abs(t);
            let num = c0 * fp::powf(a, rho);
            let den = fp::powf(a, sigma) + c1;
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        };
        Ok(ScalarFunction { f: Arc::new(f), monotone })
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static, monotone: bool) -> Self {
        ScalarFunction { f: Arc::new(f), monotone }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_lp(p: f64, entries: &[f64]) -> Vector {
        Vector::new(SpaceDescriptor::lp(entries.len(), p).unwrap(), entries.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_345() {
        assert_eq!(vec_lp(2.0, &[3.0, 4.0]).norm().unwrap(), 5.0);
    }

    #[test]
    fn l4_norm_of_ones() {
        let n = vec_lp(4.0, &[1.0, 1.0]).norm().unwrap();
        assert!((n - fp::powf(2.0, 0.25)).abs() < 1e-15);
        assert!((n - 1.189_207_115_002_721).abs() < 1e-12);
    }

    #[test]
    fn endpoints_rejected() {
        assert!(SpaceDescriptor::lp(3, 1.0).is_err());
        assert!(SpaceDescriptor::lp(3, f64::INFINITY).is_err());
        assert!(SpaceDescriptor::lp(3, 0.5).is_err());
    }

    #[test]
    fn non_finite_entry_reported() {
        let v = vec_lp(2.0, &[1.0, f64::NAN, 2.0]);
        match v.norm() {
            Err(Error::NonFiniteEntry { index }) => assert_eq!(index, 1),
            other => panic!("expected NonFiniteEntry, got {other:?}"),
        }
    }

    #[test]
    fn pairing_dimension_checked() {
        let x = vec_lp(2.0, &[1.0, 2.0]);
        let g = DualVector::new(SpaceDescriptor::euclidean(3), vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(pair(&g, &x), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duality_map_p4_example() {
        // p = 4, x = (1,1): J(x) = ||x||^-2 * (1,1) = (1/sqrt2, 1/sqrt2).
        let x = vec_lp(4.0, &[1.0, 1.0]);
        let j = x.duality_map().unwrap();
        let expect = 1.0 / fp::sqrt(2.0);
        for v in j.entries() {
            assert!((v - expect).abs() < 1e-14);
        }
        let inner = pair(&j, &x).unwrap();
        let n = x.norm().unwrap();
        assert!((inner - n * n).abs() < 1e-14);
        assert!((j.dual_norm().unwrap() - n).abs() < 1e-14);
    }

    #[test]
    fn transpose_is_exact() {
        for grid in [Grid::line(9).unwrap(), Grid::square(5).unwrap()] {
            let m = grid.unknowns();
            let v: Vec<f64> = (0..m).map(|i| (0.3 + i as f64).sin()).collect();
            let w: Vec<f64> = (0..grid.dim() * grid.edges_per_axis())
                .map(|i| (1.7 * i as f64).cos())
                .collect();
            let dv = forward_differences(grid, &v);
            let dtw = difference_transpose(grid, &w);
            let lhs = dot(&dtw, &v);
            let rhs = dot(&w, &dv);
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn sobolev_norm_matches_hand_count() {
        // v = (1, 0) on n = 2, h = 1/3: differences (3, -3, 0), p = 2 norm
        // sqrt(h * 18) = sqrt(6).
        let grid = Grid::line(2).unwrap();
        let v = Vector::new(SpaceDescriptor::sobolev(2.0, grid).unwrap(), vec![1.0, 0.0]).unwrap();
        assert!((v.norm().unwrap() - fp::sqrt(6.0)).abs() < 1e-14);
    }

    #[test]
    fn sobolev_duality_identities_p2() {
        let grid = Grid::line(7).unwrap();
        let space = SpaceDescriptor::sobolev(2.0, grid).unwrap();
        let v = Vector::new(
            space,
            (0..7).map(|i| (i as f64 * 0.7).sin() + 0.2).collect(),
        )
        .unwrap();
        let j = v.duality_map().unwrap();
        let n = v.norm().unwrap();
        assert!((pair(&j, &v).unwrap() - n * n).abs() <= 1e-12 * (1.0 + n * n));
        assert!((j.dual_norm().unwrap() - n).abs() <= 1e-12 * (1.0 + n));
    }

    #[test]
    fn sobolev_duality_identity_general_p() {
        // <v, J(v)> = ||v||^2 holds for every p; the exact dual-norm identity
        // is only checked at p = 2, where the dual norm is exact rather than
        // an upper bound.
        for p in [1.5, 3.0] {
            let grid = Grid::square(4).unwrap();
            let space = SpaceDescriptor::sobolev(p, grid).unwrap();
            let v = Vector::new(
                space,
                (0..16).map(|i| (i as f64 * 0.43).cos()).collect(),
            )
            .unwrap();
            let j = v.duality_map().unwrap();
            let n = v.norm().unwrap();
            assert!((pair(&j, &v).unwrap() - n * n).abs() <= 1e-12 * (1.0 + n * n));
        }
    }

    #[test]
    fn rational_coefficient_validated() {
        assert!(ScalarFunction::rational(1.0, 1.0, 0.5, 1.0).is_err());
        assert!(ScalarFunction::rational(1.0, 1.0, 2.0, 1.0).is_err());
        let phi = ScalarFunction::rational(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!(phi.is_monotone());
        assert!((phi.eval(1.0) - 0.25).abs() < 1e-15);
    }
}
