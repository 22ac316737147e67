//! Mapping handles, surrogate kinds, and decompositions `f = f0 + f1`.
//!
//! A [`MappingHandle`] owns a deterministic evaluation closure together with
//! the closed ball on which it is trusted; nothing in this crate evaluates a
//! mapping outside its declared ball. A [`SurrogateHandle`] is the tractable
//! half of a decomposition: something the solver can both evaluate and invert.
//! The mismatch `f1 = f - f0` is never materialized as a closure; it is
//! computed on demand by [`Decomposition::eval_f1`], so the two halves can
//! never drift apart.
//!
//! Surrogate inversion is exact for the linear kinds (LU with partial
//! pivoting) and iterative otherwise: safeguarded bisection + Newton per
//! component for diagonal monotone surrogates, damped Newton with a
//! finite-difference Jacobian for monotone blends. Iterative solves stop at
//! `inner_tol * (1 + ||z||)` in the codomain norm.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::fp;
use crate::linalg::{DenseMatrix, LuFactors};
use crate::spaces::{ScalarFunction, SpaceDescriptor, Vector};
use crate::Error;

/// Default relative tolerance of inner surrogate inversions.
pub const DEFAULT_INNER_TOL: f64 = 1e-12;
/// Default iteration cap of inner surrogate inversions.
pub const DEFAULT_MAX_INNER: usize = 80;

/// Closed ball `{ x : ||x - center|| <= radius }` in the center's space.
#[derive(Debug, Clone)]
pub struct Ball {
    center: Vector,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Self, Error> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter { what: "ball radius must be positive" });
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Distance of `x` from the center, in the space norm.
    pub fn distance(&self, x: &Vector) -> Result<f64, Error> {
        x.dist(&self.center)
    }

    /// Membership with a hair of multiplicative slack so that points
    /// constructed to lie exactly on the sphere are not rejected by roundoff.
    pub fn contains(&self, x: &Vector) -> Result<bool, Error> {
        Ok(self.distance(x)? <= self.radius * (1.0 + 1e-9))
    }
}

type EvalClosure = dyn Fn(&Vector) -> Result<Vector, Error> + Send + Sync;

/// A mapping `f: X -> Y` restricted to a declared ball.
#[derive(Clone)]
pub struct MappingHandle {
    domain: SpaceDescriptor,
    codomain: SpaceDescriptor,
    ball: Ball,
    f: Arc<EvalClosure>,
}

impl core::fmt::Debug for MappingHandle {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MappingHandle")
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .field("radius", &self.ball.radius)
            .finish()
    }
}

impl MappingHandle {
    pub fn new(
        domain: SpaceDescriptor,
        codomain: SpaceDescriptor,
        ball: Ball,
        f: Arc<EvalClosure>,
    ) -> Result<Self, Error> {
        if ball.center.space().dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: ball.center.space().dim(),
            });
        }
        Ok(MappingHandle { domain, codomain, ball, f })
    }

    /// Convenience constructor for coordinatewise mappings on one space.
    pub fn from_pointwise(
        space: SpaceDescriptor,
        ball: Ball,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, Error> {
        let codomain = space.clone();
        let out_space = space.clone();
        let eval = move |x: &Vector| {
            let entries = x.entries().iter().map(|v| f(*v)).collect();
            Vector::new(out_space.clone(), entries)
        };
        MappingHandle::new(space, codomain, ball, Arc::new(eval))
    }

    pub fn domain(&self) -> &SpaceDescriptor {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceDescriptor {
        &self.codomain
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    /// Evaluates `f(x)`. The point must lie in the declared ball; the result
    /// must come back finite and in the codomain.
    pub fn eval(&self, x: &Vector) -> Result<Vector, Error> {
        if x.space().dim() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: x.space().dim(),
            });
        }
        let dist = self.ball.distance(x)?;
        if dist > self.ball.radius * (1.0 + 1e-9) {
            return Err(Error::OutOfDomain { distance: dist, radius: self.ball.radius });
        }
        let y = (self.f)(x)?;
        if y.space().dim() != self.codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.codomain.dim(),
                got: y.space().dim(),
            });
        }
        for (index, v) in y.entries().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { index });
            }
        }
        Ok(y)
    }
}

/// Which inversion strategy a surrogate uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateKind {
    Linear,
    FrozenJacobian,
    MonotoneBlend,
    DiagonalMonotone,
}

enum Kind {
    Linear {
        matrix: DenseMatrix,
        lu: LuFactors,
    },
    Frozen {
        base: Vector,
        f_base: Vector,
        jacobian: DenseMatrix,
        lu: LuFactors,
        step: f64,
    },
    Blend {
        f1: MappingHandle,
        f2: MappingHandle,
        lambda: f64,
        rho: f64,
    },
    Diagonal {
        phi: ScalarFunction,
    },
}

/// The invertible half of a decomposition.
pub struct SurrogateHandle {
    domain: SpaceDescriptor,
    codomain: SpaceDescriptor,
    inner_tol: f64,
    max_inner: usize,
    kind: Kind,
}

impl core::fmt::Debug for SurrogateHandle {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SurrogateHandle").field("kind", &self.kind_name()).finish()
    }
}

impl SurrogateHandle {
    /// `f0(x) = A x`. The matrix is factorized here; rank deficiency is
    /// rejected immediately.
    pub fn linear(
        domain: SpaceDescriptor,
        codomain: SpaceDescriptor,
        matrix: DenseMatrix,
    ) -> Result<Self, Error> {
        if matrix.n() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), got: matrix.n() });
        }
        let lu = LuFactors::factor(&matrix)?;
        Ok(SurrogateHandle {
            domain,
            codomain,
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
            kind: Kind::Linear { matrix, lu },
        })
    }

    /// Identity surrogate on `space`.
    pub fn identity(space: SpaceDescriptor) -> Self {
        let matrix = DenseMatrix::identity(space.dim());
        let lu = LuFactors::factor(&matrix).expect("identity is nonsingular");
        SurrogateHandle {
            domain: space.clone(),
            codomain: space,
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
            kind: Kind::Linear { matrix, lu },
        }
    }

    /// Affine model frozen at `x0`: `f0(x) = f(x0) + A (x - x0)` with `A` the
    /// central finite-difference Jacobian of `f` at `x0`.
    ///
    /// The default step is `eps^(1/3) * (1 + ||x0||)`. Every probe point
    /// `x0 +- step e_j` must lie inside the mapping's ball. A rank-deficient
    /// difference quotient matrix fails with [`Error::SingularJacobian`].
    pub fn frozen_jacobian(
        f: &MappingHandle,
        x0: &Vector,
        step: Option<f64>,
    ) -> Result<Self, Error> {
        let n = f.domain().dim();
        let step = match step {
            Some(s) if s.is_finite() && s > 0.0 => s,
            Some(_) => return Err(Error::InvalidParameter { what: "fd step must be positive" }),
            None => fp::powf(f64::EPSILON, 1.0 / 3.0) * (1.0 + x0.norm()?),
        };
        let f_base = f.eval(x0)?;
        let mut jacobian = DenseMatrix::zeros(n);
        let mut probe = x0.entries().to_vec();
        for j in 0..n {
            let orig = probe[j];
            probe[j] = orig + step;
            let fp_ = f.eval(&Vector::new(x0.space().clone(), probe.clone())?)?;
            probe[j] = orig - step;
            let fm = f.eval(&Vector::new(x0.space().clone(), probe.clone())?)?;
            probe[j] = orig;
            for i in 0..n {
                jacobian.set(i, j, (fp_.entries()[i] - fm.entries()[i]) / (2.0 * step));
            }
        }
        let lu = LuFactors::factor(&jacobian)?;
        Ok(SurrogateHandle {
            domain: f.domain().clone(),
            codomain: f.codomain().clone(),
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
            kind: Kind::Frozen { base: x0.clone(), f_base, jacobian, lu, step },
        })
    }

    /// Convex blend `f0 = lambda f1 + rho f2` of two monotone mappings,
    /// inverted by damped Newton. Requires `lambda + rho = 1`, both
    /// nonnegative.
    pub fn monotone_blend(
        f1: MappingHandle,
        f2: MappingHandle,
        lambda: f64,
        rho: f64,
    ) -> Result<Self, Error> {
        if !(lambda >= 0.0 && rho >= 0.0 && fp::abs(lambda + rho - 1.0) <= 1e-12) {
            return Err(Error::InvalidParameter {
                what: "blend weights must be nonnegative and sum to 1",
            });
        }
        if f1.domain().dim() != f2.domain().dim() || f1.codomain().dim() != f2.codomain().dim() {
            return Err(Error::DimensionMismatch {
                expected: f1.domain().dim(),
                got: f2.domain().dim(),
            });
        }
        Ok(SurrogateHandle {
            domain: f1.domain().clone(),
            codomain: f1.codomain().clone(),
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
            kind: Kind::Blend { f1, f2, lambda, rho },
        })
    }

    /// `f0(x)_i = phi(x_i) x_i`, inverted one component at a time by
    /// safeguarded bisection + Newton. `phi` must carry the monotone tag
    /// (`t -> phi(t) t` nondecreasing), otherwise bracketing is unsound.
    pub fn diagonal_monotone(space: SpaceDescriptor, phi: ScalarFunction) -> Result<Self, Error> {
        if !phi.is_monotone() {
            return Err(Error::InvalidParameter {
                what: "diagonal surrogate needs a monotone phi(t) t",
            });
        }
        Ok(SurrogateHandle {
            domain: space.clone(),
            codomain: space,
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
            kind: Kind::Diagonal { phi },
        })
    }

    /// Overrides the inner inversion tolerance and iteration cap.
    pub fn with_inner_tolerance(mut self, tol: f64, max_inner: usize) -> Result<Self, Error> {
        if !(tol.is_finite() && tol > 0.0 && max_inner >= 1) {
            return Err(Error::InvalidParameter { what: "inner tol must be positive" });
        }
        self.inner_tol = tol;
        self.max_inner = max_inner;
        Ok(self)
    }

    pub fn kind_name(&self) -> SurrogateKind {
        match self.kind {
            Kind::Linear { .. } => SurrogateKind::Linear,
            Kind::Frozen { .. } => SurrogateKind::FrozenJacobian,
            Kind::Blend { .. } => SurrogateKind::MonotoneBlend,
            Kind::Diagonal { .. } => SurrogateKind::DiagonalMonotone,
        }
    }

    pub fn domain(&self) -> &SpaceDescriptor {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceDescriptor {
        &self.codomain
    }

    /// The frozen finite-difference Jacobian, when the kind carries one.
    pub fn frozen_matrix(&self) -> Option<&DenseMatrix> {
        match &self.kind {
            Kind::Frozen { jacobian, .. } => Some(jacobian),
            Kind::Linear { matrix, .. } => Some(matrix),
            _ => None,
        }
    }

    /// The finite-difference step a frozen surrogate was built with.
    pub fn fd_step(&self) -> Option<f64> {
        match &self.kind {
            Kind::Frozen { step, .. } => Some(*step),
            _ => None,
        }
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector, Error> {
        if x.space().dim() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: x.space().dim(),
            });
        }
        match &self.kind {
            Kind::Linear { matrix, .. } => {
                Vector::new(self.codomain.clone(), matrix.matvec(x.entries()))
            }
            Kind::Frozen { base, f_base, jacobian, .. } => {
                let d: Vec<f64> = x
                    .entries()
                    .iter()
                    .zip(base.entries())
                    .map(|(a, b)| a - b)
                    .collect();
                let jd = jacobian.matvec(&d);
                let entries = f_base.entries().iter().zip(&jd).map(|(a, b)| a + b).collect();
                Vector::new(self.codomain.clone(), entries)
            }
            Kind::Blend { f1, f2, lambda, rho } => {
                let a = f1.eval(x)?;
                let b = f2.eval(x)?;
                let entries = a
                    .entries()
                    .iter()
                    .zip(b.entries())
                    .map(|(u, v)| lambda * u + rho * v)
                    .collect();
                Vector::new(self.codomain.clone(), entries)
            }
            Kind::Diagonal { phi } => {
                let entries = x.entries().iter().map(|t| phi.eval(*t) * t).collect();
                Vector::new(self.codomain.clone(), entries)
            }
        }
    }

    /// Solves `f0(x) = z`. `guess` seeds the iterative kinds and is ignored
    /// by the exact ones.
    pub fn solve(&self, z: &Vector, guess: &Vector) -> Result<Vector, Error> {
        if z.space().dim() != self.codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.codomain.dim(),
                got: z.space().dim(),
            });
        }
        match &self.kind {
            Kind::Linear { lu, .. } => {
                Vector::new(self.domain.clone(), lu.solve(z.entries())?)
            }
            Kind::Frozen { base, f_base, lu, .. } => {
                let rhs: Vec<f64> = z
                    .entries()
                    .iter()
                    .zip(f_base.entries())
                    .map(|(a, b)| a - b)
                    .collect();
                let d = lu.solve(&rhs)?;
                let entries = base.entries().iter().zip(&d).map(|(a, b)| a + b).collect();
                Vector::new(self.domain.clone(), entries)
            }
            Kind::Diagonal { phi } => self.solve_diagonal(phi, z),
            Kind::Blend { .. } => self.solve_newton(z, guess),
        }
    }

    fn scalar_tol(&self, z: f64) -> f64 {
        self.inner_tol * (1.0 + fp::abs(z))
    }

    fn solve_diagonal(&self, phi: &ScalarFunction, z: &Vector) -> Result<Vector, Error> {
        let mut out = Vec::with_capacity(z.entries().len());
        for &zi in z.entries() {
            out.push(solve_scalar_monotone(phi, zi, self.scalar_tol(zi), self.max_inner)?);
        }
        Vector::new(self.domain.clone(), out)
    }

    /// Damped Newton on `f0(x) - z` with a forward-difference Jacobian,
    /// residuals measured in the codomain norm.
    ///
    /// Newton keeps stepping past the acceptance tolerance while damped
    /// steps still shrink the residual, down to the rounding floor of the
    /// residual evaluation. Stopping at the acceptance level instead would
    /// cap the accuracy of the outer comparison loop at `inner_tol * znorm`,
    /// which for large right-hand sides sits above the outer tolerance.
    fn solve_newton(&self, z: &Vector, guess: &Vector) -> Result<Vector, Error> {
        let n = self.domain.dim();
        let znorm = z.norm()?;
        let tol = self.inner_tol * (1.0 + znorm);
        let floor = 32.0 * f64::EPSILON * (1.0 + znorm);
        let mut x = Vector::new(self.domain.clone(), guess.entries().to_vec())?;
        let mut fx = self.eval(&x)?;
        let mut res = fx.sub(z)?;
        let mut res_norm = res.norm()?;

        for it in 0..self.max_inner {
            if res_norm <= floor {
                return Ok(x);
            }
            // Forward-difference Jacobian, column by column.
            let mut jac = DenseMatrix::zeros(n);
            let mut probe = x.entries().to_vec();
            for j in 0..n {
                let orig = probe[j];
                let h = fp::sqrt(f64::EPSILON) * (1.0 + fp::abs(orig));
                probe[j] = orig + h;
                let fh = self.eval(&Vector::new(self.domain.clone(), probe.clone())?)?;
                probe[j] = orig;
                for i in 0..n {
                    jac.set(i, j, (fh.entries()[i] - fx.entries()[i]) / h);
                }
            }
            let lu = match LuFactors::factor(&jac) {
                Ok(lu) => lu,
                Err(_) => {
                    return Err(Error::SurrogateSolveFailed { iterations: it, residual: res_norm })
                }
            };
            let neg_r: Vec<f64> = res.entries().iter().map(|v| -v).collect();
            let dx = lu.solve(&neg_r)?;

            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let entries: Vec<f64> = x
                    .entries()
                    .iter()
                    .zip(&dx)
                    .map(|(a, d)| a + alpha * d)
                    .collect();
                let trial = Vector::new(self.domain.clone(), entries)?;
                match self.eval(&trial) {
                    Ok(ft) => {
                        let tr = ft.sub(z)?;
                        let trn = tr.norm()?;
                        if trn <= (1.0 - 1e-4 * alpha) * res_norm {
                            x = trial;
                            fx = ft;
                            res = tr;
                            res_norm = trn;
                            accepted = true;
                            break;
                        }
                    }
                    // Out-of-ball or non-finite trial: shrink the step.
                    Err(_) => {}
                }
                alpha *= 0.5;
            }
            if !accepted {
                // No descent left at this scale. The iterate is as accurate
                // as the arithmetic allows; accept it when it meets the
                // contract tolerance, fail otherwise.
                return if res_norm <= tol {
                    Ok(x)
                } else {
                    Err(Error::SurrogateSolveFailed { iterations: it, residual: res_norm })
                };
            }
        }
        if res_norm <= tol {
            Ok(x)
        } else {
            Err(Error::SurrogateSolveFailed { iterations: self.max_inner, residual: res_norm })
        }
    }
}

/// Safeguarded bisection + Newton on the nondecreasing scalar function
/// `g(t) = phi(t) t`, solving `g(t) = z`.
fn solve_scalar_monotone(
    phi: &ScalarFunction,
    z: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64, Error> {
    let g = |t: f64| phi.eval(t) * t;
    // Bracket by doubling outward from 0.
    let mut width = 1.0 + fp::abs(z);
    let (mut lo, mut hi) = (-width, width);
    let mut expansions = 0;
    while g(hi) < z {
        hi += width;
        width *= 2.0;
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(Error::SurrogateSolveFailed { iterations: expansions, residual: z - g(hi) });
        }
    }
    while g(lo) > z {
        lo -= width;
        width *= 2.0;
        expansions += 1;
        if expansions > 200 || !lo.is_finite() {
            return Err(Error::SurrogateSolveFailed { iterations: expansions, residual: g(lo) - z });
        }
    }

    let mut t = 0.5 * (lo + hi);
    for it in 0..max_iter.max(64) {
        let gt = g(t);
        let r = gt - z;
        if fp::abs(r) <= tol {
            return Ok(t);
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        // Newton step from a central difference slope, kept only when it
        // stays inside the bracket.
        let h = fp::powf(f64::EPSILON, 1.0 / 3.0) * (1.0 + fp::abs(t));
        let slope = (g(t + h) - g(t - h)) / (2.0 * h);
        let mut next = if slope > 0.0 { t - r / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if hi - lo <= f64::EPSILON * (1.0 + fp::abs(t)) {
            // Bracket exhausted; accept only if the residual is honest.
            let r = g(0.5 * (lo + hi)) - z;
            if fp::abs(r) <= tol {
                return Ok(0.5 * (lo + hi));
            }
            return Err(Error::SurrogateSolveFailed { iterations: it, residual: fp::abs(r) });
        }
        t = next;
    }
    let r = fp::abs(g(t) - z);
    if r <= tol {
        Ok(t)
    } else {
        Err(Error::SurrogateSolveFailed { iterations: max_iter, residual: r })
    }
}

/// A mapping together with the surrogate it is compared against.
///
/// `f1 = f - f0` exists only through [`Decomposition::eval_f1`].
pub struct Decomposition {
    f: MappingHandle,
    f0: SurrogateHandle,
}

impl Decomposition {
    pub fn new(f: MappingHandle, f0: SurrogateHandle) -> Result<Self, Error> {
        if f.domain().dim() != f0.domain().dim() {
            return Err(Error::DimensionMismatch {
                expected: f.domain().dim(),
                got: f0.domain().dim(),
            });
        }
        if f.codomain().dim() != f0.codomain().dim() {
            return Err(Error::DimensionMismatch {
                expected: f.codomain().dim(),
                got: f0.codomain().dim(),
            });
        }
        Ok(Decomposition { f, f0 })
    }

    pub fn f(&self) -> &MappingHandle {
        &self.f
    }

    pub fn f0(&self) -> &SurrogateHandle {
        &self.f0
    }

    /// `f1(x) = f(x) - f0(x)`, computed fresh on every call.
    pub fn eval_f1(&self, x: &Vector) -> Result<Vector, Error> {
        let a = self.f.eval(x)?;
        let b = self.f0.eval(x)?;
        a.sub(&b)
    }
}
