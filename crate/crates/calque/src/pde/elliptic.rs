//! Quasilinear diffusion on a Dirichlet grid, in strong divergence form.
//!
//! The operator acts on node values as `f(u) = D^T (a .* D u)`: forward
//! differences along every axis, an edge-by-edge coefficient
//! `a(axis, x_edge, xi, eta)` evaluated at the edge midpoint with the
//! averaged state `xi` and the difference quotient `eta`, then the exact
//! transpose of the difference operator. With `a = 1` this reproduces the
//! usual `(-1, 2, -1)/h^2` stencil, so node values of `f(u)` converge to the
//! continuous strong form at second order.
//!
//! The surrogate is the convex blend of the two bound operators
//! `u -> D^T (b(x) phi(eta) eta)` and `u -> D^T (c(x) phi(eta) eta)`. Their
//! envelope condition, `c(x) phi(eta) <= a(x, xi, eta) <= b(x) phi(eta)`, is
//! sampled at construction over every edge and a grid of `(xi, eta)`
//! arguments; escaping it is a hard error, not a warning.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::fp;
use crate::grid::Grid;
use crate::operators::{Ball, Decomposition, MappingHandle, SurrogateHandle};
use crate::solve::{solve_comparison, SolveConfig, SolveTrace};
use crate::spaces::{
    difference_transpose, forward_differences, ScalarFunction, SpaceDescriptor, Vector,
};
use crate::Error;

/// Edge coefficient: `(axis, edge midpoint, averaged state, difference)`.
/// The midpoint always carries two coordinates; 1d grids use the first.
pub type Coefficient = Arc<dyn Fn(usize, [f64; 2], f64, f64) -> f64 + Send + Sync>;

/// Per-axis spatial bound, evaluated at edge midpoints.
pub type BoundField = Arc<dyn Fn(usize, [f64; 2]) -> f64 + Send + Sync>;

/// The two bound fields, the shape function, and the blend weights.
#[derive(Clone)]
pub struct EnvelopeSpec {
    pub b: BoundField,
    pub c: BoundField,
    pub phi: ScalarFunction,
    pub lambda: f64,
    pub rho: f64,
}

impl EnvelopeSpec {
    /// Constant bounds with `phi = 1` and an even blend.
    pub fn constant(b: f64, c: f64) -> Self {
        EnvelopeSpec {
            b: Arc::new(move |_, _| b),
            c: Arc::new(move |_, _| c),
            phi: ScalarFunction::one(),
            lambda: 0.5,
            rho: 0.5,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if !(self.lambda >= 0.0
            && self.rho >= 0.0
            && fp::abs(self.lambda + self.rho - 1.0) <= 1e-12)
        {
            return Err(Error::InvalidParameter {
                what: "blend weights must be nonnegative and sum to 1",
            });
        }
        Ok(())
    }
}

/// One grid edge: which axis, where its midpoint sits, and the node indices
/// on either side (`None` at the Dirichlet boundary). Edge order matches the
/// layout of [`forward_differences`].
struct EdgeInfo {
    axis: usize,
    mid: [f64; 2],
    lo: Option<usize>,
    hi: Option<usize>,
}

fn edge_table(grid: Grid) -> Vec<EdgeInfo> {
    let n = grid.n();
    let h = grid.h();
    let mut edges = Vec::with_capacity(grid.dim() * grid.edges_per_axis());
    match grid.dim() {
        1 => {
            for j in 0..=n {
                edges.push(EdgeInfo {
                    axis: 0,
                    mid: [(j as f64 + 0.5) * h, 0.0],
                    lo: if j == 0 { None } else { Some(j - 1) },
                    hi: if j == n { None } else { Some(j) },
                });
            }
        }
        _ => {
            for j in 0..n {
                for i in 0..=n {
                    edges.push(EdgeInfo {
                        axis: 0,
                        mid: [(i as f64 + 0.5) * h, (j as f64 + 1.0) * h],
                        lo: if i == 0 { None } else { Some(grid.idx2(i - 1, j)) },
                        hi: if i == n { None } else { Some(grid.idx2(i, j)) },
                    });
                }
            }
            for i in 0..n {
                for j in 0..=n {
                    edges.push(EdgeInfo {
                        axis: 1,
                        mid: [(i as f64 + 1.0) * h, (j as f64 + 0.5) * h],
                        lo: if j == 0 { None } else { Some(grid.idx2(i, j - 1)) },
                        hi: if j == n { None } else { Some(grid.idx2(i, j)) },
                    });
                }
            }
        }
    }
    edges
}

/// `D^T (coef(edge) * D u)` with `coef` receiving `(axis, mid, xi, eta)`.
fn apply_divergence_form(
    grid: Grid,
    edges: &[EdgeInfo],
    u: &[f64],
    coef: &dyn Fn(usize, [f64; 2], f64, f64) -> f64,
) -> Vec<f64> {
    let du = forward_differences(grid, u);
    let mut flux = vec![0.0; du.len()];
    for (e, edge) in edges.iter().enumerate() {
        let eta = du[e];
        let lo = edge.lo.map(|i| u[i]).unwrap_or(0.0);
        let hi = edge.hi.map(|i| u[i]).unwrap_or(0.0);
        let xi = 0.5 * (lo + hi);
        flux[e] = coef(edge.axis, edge.mid, xi, eta) * eta;
    }
    difference_transpose(grid, &flux)
}

/// A built diffusion problem: the mapping on the Sobolev space, its blend
/// surrogate, and the grid geometry.
pub struct EllipticProblem {
    grid: Grid,
    p: f64,
    radius: f64,
    domain: SpaceDescriptor,
    codomain: SpaceDescriptor,
    decomposition: Decomposition,
}

impl EllipticProblem {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn domain(&self) -> &SpaceDescriptor {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceDescriptor {
        &self.codomain
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }
}

/// Checks the envelope by sampling, then wires up the mapping and the blend
/// surrogate.
///
/// Sampling covers every edge, five state values spanning `[-r, r]`, and a
/// two-sided geometric ladder of difference quotients up to the largest value
/// a function of norm `r` can put on a single edge. Zero is skipped: the
/// envelope constrains the flux `a eta` against `b phi(eta) eta`, which is
/// vacuous at `eta = 0`.
pub fn build_elliptic(
    grid: Grid,
    p: f64,
    a: Coefficient,
    envelope: EnvelopeSpec,
    radius: f64,
) -> Result<EllipticProblem, Error> {
    envelope.validate()?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter { what: "ball radius must be positive" });
    }
    let domain = SpaceDescriptor::sobolev(p, grid)?;
    let codomain = SpaceDescriptor::sobolev_dual(p, grid)?;
    let edges = Arc::new(edge_table(grid));

    check_envelope(grid, p, &edges, &a, &envelope, radius)?;

    let ball = Ball::new(Vector::zeros(domain.clone()), radius)?;
    let f = {
        let edges = edges.clone();
        let a = a.clone();
        let codomain = codomain.clone();
        MappingHandle::new(
            domain.clone(),
            codomain.clone(),
            ball,
            Arc::new(move |u: &Vector| {
                let out =
                    apply_divergence_form(grid, &edges, u.entries(), &|ax, mid, xi, eta| {
                        a(ax, mid, xi, eta)
                    });
                Vector::new(codomain.clone(), out)
            }),
        )?
    };

    // The half operators get a wider trust region than f: the inner Newton
    // may probe past the outer ball, and monotone fluxes are defined there.
    let half_ball = || Ball::new(Vector::zeros(domain.clone()), 4.0 * radius + 16.0);
    let mut halves = Vec::with_capacity(2);
    for bound in [envelope.b.clone(), envelope.c.clone()] {
        let edges = edges.clone();
        let phi = envelope.phi.clone();
        let codomain_cl = codomain.clone();
        halves.push(MappingHandle::new(
            domain.clone(),
            codomain.clone(),
            half_ball()?,
            Arc::new(move |u: &Vector| {
                let out =
                    apply_divergence_form(grid, &edges, u.entries(), &|ax, mid, _xi, eta| {
                        bound(ax, mid) * phi.eval(eta)
                    });
                Vector::new(codomain_cl.clone(), out)
            }),
        )?);
    }
    let f2 = halves.pop().expect("two halves");
    let f1 = halves.pop().expect("two halves");
    let f0 = SurrogateHandle::monotone_blend(f1, f2, envelope.lambda, envelope.rho)?;

    Ok(EllipticProblem {
        grid,
        p,
        radius,
        domain,
        codomain,
        decomposition: Decomposition::new(f, f0)?,
    })
}

fn check_envelope(
    grid: Grid,
    p: f64,
    edges: &[EdgeInfo],
    a: &Coefficient,
    envelope: &EnvelopeSpec,
    radius: f64,
) -> Result<(), Error> {
    // Largest single-edge difference a function of Sobolev norm `radius`
    // can produce: h^dim |eta|^p <= r^p.
    let h = grid.h();
    let w = if grid.dim() == 1 { h } else { h * h };
    let eta_max = radius * fp::powf(w, -1.0 / p);
    let xi_max = radius;
    let states = [-xi_max, -0.5 * xi_max, 0.0, 0.5 * xi_max, xi_max];
    let ladder: Vec<f64> = (0..17)
        .map(|k| eta_max * fp::powf(10.0, -4.0 + 0.25 * k as f64))
        .collect();

    for edge in edges {
        let b_val = (envelope.b)(edge.axis, edge.mid);
        let c_val = (envelope.c)(edge.axis, edge.mid);
        for &xi in &states {
            for &mag in &ladder {
                for eta in [mag, -mag] {
                    let value = a(edge.axis, edge.mid, xi, eta);
                    let shape = envelope.phi.eval(eta);
                    let lower = c_val * shape;
                    let upper = b_val * shape;
                    let slack = 1e-12 * (1.0 + fp::abs(upper) + fp::abs(value));
                    if value < lower - slack || value > upper + slack {
                        return Err(Error::CoefficientEnvelopeViolated {
                            axis: edge.axis,
                            point: edge.mid.to_vec(),
                            state: xi,
                            gradient: eta,
                            value,
                            lower,
                            upper,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Solves `f(u) = rhs` from the zero start by successive comparison.
pub fn solve_elliptic(
    problem: &EllipticProblem,
    rhs: &Vector,
    cfg: &SolveConfig,
) -> Result<SolveTrace, Error> {
    let start = Vector::zeros(problem.domain.clone());
    solve_comparison(&problem.decomposition, rhs, &start, cfg)
}

/// Node samples of a function of space, row-major, for manufactured
/// solutions and forcing fields.
pub fn sample_on_grid(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let n = grid.n();
    let h = grid.h();
    match grid.dim() {
        1 => (0..n).map(|i| f((i as f64 + 1.0) * h, 0.0)).collect(),
        _ => {
            let mut v = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    v.push(f((i as f64 + 1.0) * h, (j as f64 + 1.0) * h));
                }
            }
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_coefficient() -> Coefficient {
        Arc::new(|_, _, _, eta| 1.0 + 1.0 / (1.0 + eta * eta))
    }

    fn problem_1d(n: usize) -> EllipticProblem {
        build_elliptic(
            Grid::line(n).unwrap(),
            2.0,
            default_coefficient(),
            EnvelopeSpec::constant(2.0, 1.0),
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn constant_coefficient_reproduces_stencil() {
        // a = 1: f(u) must equal the (-1, 2, -1)/h^2 stencil exactly.
        let grid = Grid::line(5).unwrap();
        let prob = build_elliptic(
            grid,
            2.0,
            Arc::new(|_, _, _, _| 1.0),
            EnvelopeSpec::constant(1.0, 1.0),
            10.0,
        )
        .unwrap();
        let u: Vec<f64> = (0..5).map(|i| (i as f64 * 0.9).sin()).collect();
        let x = Vector::new(prob.domain().clone(), u.clone()).unwrap();
        let fu = prob.decomposition().f().eval(&x).unwrap();
        let h = grid.h();
        for i in 0..5 {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i == 4 { 0.0 } else { u[i + 1] };
            let expect = (2.0 * u[i] - left - right) / (h * h);
            assert!((fu.entries()[i] - expect).abs() < 1e-10 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn consistency_is_second_order() {
        // Manufactured u = sin(pi x) against -u'' = pi^2 sin(pi x).
        let mut errors = Vec::new();
        for n in [9usize, 19, 39] {
            let grid = Grid::line(n).unwrap();
            let prob = build_elliptic(
                grid,
                2.0,
                Arc::new(|_, _, _, _| 1.0),
                EnvelopeSpec::constant(1.0, 1.0),
                10.0,
            )
            .unwrap();
            let h = grid.h();
            let u: Vec<f64> = (0..n)
                .map(|i| (core::f64::consts::PI * (i as f64 + 1.0) * h).sin())
                .collect();
            let x = Vector::new(prob.domain().clone(), u).unwrap();
            let fu = prob.decomposition().f().eval(&x).unwrap();
            let mut worst = 0.0f64;
            for i in 0..n {
                let xi = (i as f64 + 1.0) * h;
                let exact =
                    core::f64::consts::PI * core::f64::consts::PI * (core::f64::consts::PI * xi).sin();
                worst = worst.max((fu.entries()[i] - exact).abs());
            }
            errors.push(worst);
        }
        // Halving h divides the error by about 4.
        let rate = (errors[0] / errors[1]).log2();
        assert!(rate > 1.7 && rate < 2.3, "rate {rate}");
    }

    #[test]
    fn envelope_violation_is_rejected() {
        // sup a = 2 but b = 1.4: the check must name the escape.
        let err = build_elliptic(
            Grid::line(9).unwrap(),
            2.0,
            default_coefficient(),
            EnvelopeSpec::constant(1.4, 1.0),
            10.0,
        );
        match err {
            Err(Error::CoefficientEnvelopeViolated { value, upper, .. }) => {
                assert!(value > upper);
            }
            other => panic!("expected envelope violation, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn manufactured_solution_recovered() {
        let prob = problem_1d(17);
        let n = 17;
        let h = prob.grid().h();
        let star: Vec<f64> = (0..n)
            .map(|i| (core::f64::consts::PI * (i as f64 + 1.0) * h).sin())
            .collect();
        let u_star = Vector::new(prob.domain().clone(), star).unwrap();
        let rhs = prob.decomposition().f().eval(&u_star).unwrap();
        let trace = solve_elliptic(&prob, &rhs, &SolveConfig::default()).unwrap();
        let (u, _) = trace.outcome.converged().expect("converged");
        let err = u.sub(&u_star).unwrap().norm().unwrap();
        assert!(err < 1e-8, "error {err}");
        assert!(trace.telescoping_defect <= 1e-10 * (1.0 + trace.shift_norm));
    }

    #[test]
    fn two_dimensional_problem_solves() {
        let grid = Grid::square(5).unwrap();
        let prob = build_elliptic(
            grid,
            2.0,
            default_coefficient(),
            EnvelopeSpec::constant(2.0, 1.0),
            10.0,
        )
        .unwrap();
        let h = grid.h();
        let star: Vec<f64> = {
            let mut v = Vec::new();
            for j in 0..5 {
                for i in 0..5 {
                    let x = (i as f64 + 1.0) * h;
                    let y = (j as f64 + 1.0) * h;
                    v.push((core::f64::consts::PI * x).sin() * (core::f64::consts::PI * y).sin());
                }
            }
            v
        };
        let u_star = Vector::new(prob.domain().clone(), star).unwrap();
        let rhs = prob.decomposition().f().eval(&u_star).unwrap();
        let trace = solve_elliptic(&prob, &rhs, &SolveConfig::default()).unwrap();
        let (u, _) = trace.outcome.converged().expect("converged");
        assert!(u.sub(&u_star).unwrap().norm().unwrap() < 1e-8);
    }
}
