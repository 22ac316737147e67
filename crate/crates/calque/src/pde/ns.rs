//! Steady and time-stepped Navier-Stokes with shear-dependent damping, in a
//! divergence-free stream-function Galerkin basis on the unit square.
//!
//! Basis modes are `psi_k = (x(1-x) y(1-y))^2 sin(i pi x) sin(j pi y)` with
//! velocities `u_k = (d_y psi_k, -d_x psi_k)`; the divergence of every mode
//! and of every combination vanishes identically, in floating point too,
//! because the two diagonal entries of the velocity gradient are the same
//! product with opposite signs.
//!
//! The weak operator on coefficient vectors is
//!
//! ```text
//! F(c)_k = nu <grad u, grad u_k> + <2 phi(s(u)) Bu, B u_k> + <(u.grad) u, u_k>
//! ```
//!
//! with `B` the symmetric gradient and `s(u) = |Bu|` its Frobenius size. The
//! Stokes part `nu G` (assembled once) is the linear surrogate; damping and
//! convection ride in the mismatch. All integrals use tensor Gauss-Legendre
//! quadrature; construction refines the rule by two points per axis and
//! rejects the setup if any Gram or mass entry moves by more than `1e-8`
//! relative to the largest entry.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fp;
use crate::linalg::{DenseMatrix, LuFactors};
use crate::operators::{Ball, Decomposition, MappingHandle, SurrogateHandle};
use crate::pde::quad::gauss_legendre_unit;
use crate::solve::{solve_comparison, SolveConfig, SolveTrace};
use crate::spaces::{dot, ScalarFunction, SpaceDescriptor, Vector};
use crate::Error;

/// Construction parameters. `None` fields fall back to values derived from
/// the viscosity: `phi = (nu/6) t / (t + 1)`, `delta = nu/6`, and a
/// quadrature rule with `3 I_max + 10` points per axis, enough to resolve the
/// convection triple products of the highest mode.
#[derive(Clone)]
pub struct NsConfig {
    pub modes: usize,
    pub nu: f64,
    /// Trust radius of the coefficient ball.
    pub radius: f64,
    pub quad_points: Option<usize>,
    pub phi: Option<ScalarFunction>,
    /// Margin in the energy bound `<F(c), c> >= (2 nu / 3 + delta) |c|_V^2`.
    pub delta: Option<f64>,
    /// Constant in the damping comparison `|phi(t)-phi(tau)| t <= (mu + phi(t)) |t-tau|`.
    pub mu: f64,
}

impl Default for NsConfig {
    fn default() -> Self {
        NsConfig {
            modes: 8,
            nu: 0.1,
            radius: 8.0,
            quad_points: None,
            phi: None,
            delta: None,
            mu: 0.0,
        }
    }
}

/// Mode frequencies in a fixed deterministic order: grouped by the larger
/// frequency, then total, then the x frequency.
pub fn default_modes(count: usize) -> Vec<(usize, usize)> {
    let mut bound = 1usize;
    while bound * bound < count {
        bound += 1;
    }
    bound += 1;
    let mut all: Vec<(usize, usize)> = Vec::new();
    for i in 1..=bound {
        for j in 1..=bound {
            all.push((i, j));
        }
    }
    all.sort_by_key(|&(i, j)| (i.max(j), i + j, i, j));
    all.truncate(count);
    all
}

/// Quadrature-sampled mode fields, node-major so the per-node coefficient
/// loops run over contiguous memory.
struct Tables {
    k: usize,
    nn: usize,
    w: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    g11: Vec<f64>,
    g12: Vec<f64>,
    g21: Vec<f64>,
    /// Quadrature nodes, for forcing projections.
    nodes: Vec<f64>,
}

fn bubble(t: f64) -> (f64, f64, f64) {
    let a = t * (1.0 - t);
    let v = a * a;
    let d1 = 2.0 * a * (1.0 - 2.0 * t);
    let d2 = 2.0 * ((1.0 - 2.0 * t) * (1.0 - 2.0 * t) - 2.0 * a);
    (v, d1, d2)
}

fn build_tables(modes: &[(usize, usize)], nq: usize) -> Tables {
    let (nodes, wts) = gauss_legendre_unit(nq);
    let imax = modes.iter().map(|&(i, j)| i.max(j)).max().unwrap_or(1);

    // Per-frequency axis factors F = A sin, F', F'' at each node.
    let mut fac = vec![vec![(0.0f64, 0.0f64, 0.0f64); nq]; imax + 1];
    for (freq, row) in fac.iter_mut().enumerate().skip(1) {
        let om = freq as f64 * core::f64::consts::PI;
        for (slot, &t) in row.iter_mut().zip(&nodes) {
            let (a, a1, a2) = bubble(t);
            let s = fp::sin(om * t);
            let c = fp::cos(om * t);
            *slot = (
                a * s,
                a1 * s + a * om * c,
                a2 * s + 2.0 * a1 * om * c - a * om * om * s,
            );
        }
    }

    let k = modes.len();
    let nn = nq * nq;
    let mut t = Tables {
        k,
        nn,
        w: vec![0.0; nn],
        u1: vec![0.0; k * nn],
        u2: vec![0.0; k * nn],
        g11: vec![0.0; k * nn],
        g12: vec![0.0; k * nn],
        g21: vec![0.0; k * nn],
        nodes,
    };
    for a in 0..nq {
        for b in 0..nq {
            t.w[a * nq + b] = wts[a] * wts[b];
        }
    }
    for (kk, &(i, j)) in modes.iter().enumerate() {
        for a in 0..nq {
            let (fx, fx1, fx2) = fac[i][a];
            for b in 0..nq {
                let (gy, gy1, gy2) = fac[j][b];
                let node = a * nq + b;
                let at = node * k + kk;
                t.u1[at] = fx * gy1;
                t.u2[at] = -fx1 * gy;
                t.g11[at] = fx1 * gy1;
                t.g12[at] = fx * gy2;
                t.g21[at] = -fx2 * gy;
            }
        }
    }
    t
}

fn assemble(t: &Tables) -> (DenseMatrix, DenseMatrix) {
    let k = t.k;
    let mut gram = DenseMatrix::zeros(k);
    let mut mass = DenseMatrix::zeros(k);
    for node in 0..t.nn {
        let w = t.w[node];
        let base = node * k;
        for r in 0..k {
            let g11r = t.g11[base + r];
            let g12r = t.g12[base + r];
            let g21r = t.g21[base + r];
            let u1r = t.u1[base + r];
            let u2r = t.u2[base + r];
            for cidx in r..k {
                let gg = 2.0 * g11r * t.g11[base + cidx]
                    + g12r * t.g12[base + cidx]
                    + g21r * t.g21[base + cidx];
                let mm = u1r * t.u1[base + cidx] + u2r * t.u2[base + cidx];
                gram.add_to(r, cidx, w * gg);
                mass.add_to(r, cidx, w * mm);
                if cidx != r {
                    gram.add_to(cidx, r, w * gg);
                    mass.add_to(cidx, r, w * mm);
                }
            }
        }
    }
    (gram, mass)
}

/// `F(c)` on raw coefficient slices; shared by the problem mapping and the
/// implicit-Euler step mapping.
fn eval_operator(t: &Tables, phi: &ScalarFunction, nu: f64, c: &[f64]) -> Vec<f64> {
    let k = t.k;
    let mut out = vec![0.0; k];
    for node in 0..t.nn {
        let base = node * k;
        let mut u1 = 0.0;
        let mut u2 = 0.0;
        let mut g11 = 0.0;
        let mut g12 = 0.0;
        let mut g21 = 0.0;
        for (kk, ck) in c.iter().enumerate() {
            u1 += ck * t.u1[base + kk];
            u2 += ck * t.u2[base + kk];
            g11 += ck * t.g11[base + kk];
            g12 += ck * t.g12[base + kk];
            g21 += ck * t.g21[base + kk];
        }
        let b12 = 0.5 * (g12 + g21);
        let s = fp::sqrt(2.0 * g11 * g11 + 2.0 * b12 * b12);
        let two_phi = 2.0 * phi.eval(s);
        // (u . grad) u with g22 = -g11.
        let conv1 = u1 * g11 + u2 * g12;
        let conv2 = u1 * g21 - u2 * g11;
        let w = t.w[node];
        for kk in 0..k {
            let gg = 2.0 * g11 * t.g11[base + kk]
                + g12 * t.g12[base + kk]
                + g21 * t.g21[base + kk];
            let bb = 2.0 * g11 * t.g11[base + kk] + b12 * (t.g12[base + kk] + t.g21[base + kk]);
            let cv = conv1 * t.u1[base + kk] + conv2 * t.u2[base + kk];
            out[kk] += w * (nu * gg + two_phi * bb + cv);
        }
    }
    out
}

/// A built Galerkin problem: mode set, matrices, and the decomposition with
/// the Stokes surrogate.
pub struct NsProblem {
    modes: Vec<(usize, usize)>,
    nu: f64,
    delta: f64,
    mu: f64,
    radius: f64,
    phi: ScalarFunction,
    space: SpaceDescriptor,
    tables: Arc<Tables>,
    gram: DenseMatrix,
    mass: DenseMatrix,
    gram_lu: LuFactors,
    decomposition: Decomposition,
}

pub fn build_ns(cfg: &NsConfig) -> Result<NsProblem, Error> {
    if cfg.modes == 0 {
        return Err(Error::InvalidParameter { what: "need at least one mode" });
    }
    if !(cfg.nu.is_finite() && cfg.nu > 0.0) {
        return Err(Error::InvalidParameter { what: "viscosity must be positive" });
    }
    if !(cfg.radius.is_finite() && cfg.radius > 0.0) {
        return Err(Error::InvalidParameter { what: "ball radius must be positive" });
    }
    let delta = cfg.delta.unwrap_or(cfg.nu / 6.0);
    if !(delta > 0.0 && delta <= cfg.nu / 3.0) {
        return Err(Error::InvalidParameter { what: "delta must lie in (0, nu/3]" });
    }
    if !(cfg.mu >= 0.0 && cfg.mu <= cfg.nu / 3.0 - delta + 1e-15) {
        return Err(Error::InvalidParameter { what: "mu must lie in [0, nu/3 - delta]" });
    }
    let phi = match &cfg.phi {
        Some(p) => p.clone(),
        None => {
            let c0 = cfg.nu / 6.0;
            ScalarFunction::rational(c0, 1.0, 1.0, 1.0)?
        }
    };

    let modes = default_modes(cfg.modes);
    let imax = modes.iter().map(|&(i, j)| i.max(j)).max().unwrap_or(1);
    let nq = cfg.quad_points.unwrap_or(3 * imax + 10).max(2);

    let tables = build_tables(&modes, nq);
    let (gram, mass) = assemble(&tables);

    // Refinement check: two more points per axis must leave every entry
    // unchanged relative to the largest one.
    let refined = build_tables(&modes, nq + 2);
    let (gram_r, mass_r) = assemble(&refined);
    for (coarse, fine) in [(&gram, &gram_r), (&mass, &mass_r)] {
        let mut scale = 0.0f64;
        for r in 0..coarse.n() {
            for c in 0..coarse.n() {
                scale = fp::max(scale, fp::abs(coarse.at(r, c)));
            }
        }
        for r in 0..coarse.n() {
            for c in 0..coarse.n() {
                let change = fp::abs(coarse.at(r, c) - fine.at(r, c)) / scale;
                if change > 1e-8 {
                    return Err(Error::QuadratureUnderResolved { entry_change: change });
                }
            }
        }
    }

    let k = modes.len();
    let space = SpaceDescriptor::lp(k, 2.0)?;
    let tables = Arc::new(tables);
    let ball = Ball::new(Vector::zeros(space.clone()), cfg.radius)?;
    let f = {
        let tables = tables.clone();
        let phi_cl = phi.clone();
        let nu = cfg.nu;
        let space_cl = space.clone();
        MappingHandle::new(
            space.clone(),
            space.clone(),
            ball,
            Arc::new(move |c: &Vector| {
                Vector::new(space_cl.clone(), eval_operator(&tables, &phi_cl, nu, c.entries()))
            }),
        )?
    };
    let mut stokes = gram.clone();
    stokes.scale(cfg.nu);
    let f0 = SurrogateHandle::linear(space.clone(), space.clone(), stokes)?;
    let gram_lu = LuFactors::factor(&gram)?;

    Ok(NsProblem {
        modes,
        nu: cfg.nu,
        delta,
        mu: cfg.mu,
        radius: cfg.radius,
        phi,
        space,
        tables,
        gram,
        mass,
        gram_lu,
        decomposition: Decomposition::new(f, f0)?,
    })
}

impl NsProblem {
    pub fn modes(&self) -> &[(usize, usize)] {
        &self.modes
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coefficient_space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn mass(&self) -> &DenseMatrix {
        &self.mass
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn apply(&self, c: &Vector) -> Result<Vector, Error> {
        self.decomposition.f().eval(c)
    }

    /// `|c|_V = sqrt(c^T G c)`, the gradient seminorm of the velocity field.
    pub fn v_norm(&self, c: &Vector) -> f64 {
        fp::sqrt(fp::max(dot(&self.gram.matvec(c.entries()), c.entries()), 0.0))
    }

    /// Dual norm `sqrt(g^T G^-1 g)` of a coefficient functional.
    pub fn vstar_norm(&self, g: &Vector) -> Result<f64, Error> {
        let z = self.gram_lu.solve(g.entries())?;
        Ok(fp::sqrt(fp::max(dot(&z, g.entries()), 0.0)))
    }

    /// `L^2` norm of the velocity field, `sqrt(c^T M c)`.
    pub fn velocity_l2(&self, c: &Vector) -> f64 {
        fp::sqrt(fp::max(dot(&self.mass.matvec(c.entries()), c.entries()), 0.0))
    }

    /// `L^4` norm of the velocity field by quadrature.
    pub fn velocity_l4(&self, c: &Vector) -> f64 {
        let t = &*self.tables;
        let mut acc = 0.0;
        for node in 0..t.nn {
            let base = node * t.k;
            let mut u1 = 0.0;
            let mut u2 = 0.0;
            for (kk, ck) in c.entries().iter().enumerate() {
                u1 += ck * t.u1[base + kk];
                u2 += ck * t.u2[base + kk];
            }
            let sq = u1 * u1 + u2 * u2;
            acc += t.w[node] * sq * sq;
        }
        fp::powf(fp::max(acc, 0.0), 0.25)
    }

    /// `(2 |Bu|^2, |grad u|^2)` integrated: equal halves for divergence-free
    /// fields with these boundary conditions.
    pub fn symmetric_gradient_split(&self, c: &Vector) -> (f64, f64) {
        let t = &*self.tables;
        let mut b2 = 0.0;
        let mut g2 = 0.0;
        for node in 0..t.nn {
            let base = node * t.k;
            let mut g11 = 0.0;
            let mut g12 = 0.0;
            let mut g21 = 0.0;
            for (kk, ck) in c.entries().iter().enumerate() {
                g11 += ck * t.g11[base + kk];
                g12 += ck * t.g12[base + kk];
                g21 += ck * t.g21[base + kk];
            }
            let b12 = 0.5 * (g12 + g21);
            b2 += t.w[node] * (2.0 * g11 * g11 + 2.0 * b12 * b12);
            g2 += t.w[node] * (2.0 * g11 * g11 + g12 * g12 + g21 * g21);
        }
        (2.0 * b2, g2)
    }

    /// `integral ((u . grad) u) . u` by quadrature. The integrand is an exact
    /// divergence for these fields, so the value is quadrature noise around
    /// zero; exposing it lets callers measure that noise.
    pub fn convection_pairing(&self, c: &Vector) -> f64 {
        let t = &*self.tables;
        let mut acc = 0.0;
        for node in 0..t.nn {
            let base = node * t.k;
            let mut u1 = 0.0;
            let mut u2 = 0.0;
            let mut g11 = 0.0;
            let mut g12 = 0.0;
            let mut g21 = 0.0;
            for (kk, ck) in c.entries().iter().enumerate() {
                u1 += ck * t.u1[base + kk];
                u2 += ck * t.u2[base + kk];
                g11 += ck * t.g11[base + kk];
                g12 += ck * t.g12[base + kk];
                g21 += ck * t.g21[base + kk];
            }
            let conv1 = u1 * g11 + u2 * g12;
            let conv2 = u1 * g21 - u2 * g11;
            acc += t.w[node] * (conv1 * u1 + conv2 * u2);
        }
        acc
    }

    /// Projects a velocity field onto the coefficient functionals:
    /// `H_k = <field, u_k>` by quadrature.
    pub fn forcing_from_field(
        &self,
        field: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<Vector, Error> {
        let t = &*self.tables;
        let nq = t.nodes.len();
        let mut out = vec![0.0; t.k];
        for a in 0..nq {
            for b in 0..nq {
                let node = a * nq + b;
                let (h1, h2) = field(t.nodes[a], t.nodes[b]);
                let base = node * t.k;
                for (kk, o) in out.iter_mut().enumerate() {
                    *o += t.w[node] * (h1 * t.u1[base + kk] + h2 * t.u2[base + kk]);
                }
            }
        }
        Vector::new(self.space.clone(), out)
    }
}

/// One sampled-or-scanned inequality with the worst margin observed.
/// Positive margins mean the inequality held with room to spare.
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub label: &'static str,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct NsConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl NsConditionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let v = fp::sqrt(-2.0 * fp::ln(u1)) * fp::cos(2.0 * core::f64::consts::PI * u2);
        if v.is_finite() {
            return v;
        }
    }
}

fn random_coefficients(rng: &mut ChaCha8Rng, prob: &NsProblem) -> Result<Vector, Error> {
    let k = prob.space.dim();
    loop {
        let entries: Vec<f64> = (0..k).map(|_| gaussian(rng)).collect();
        let v = Vector::new(prob.space.clone(), entries)?;
        let n = v.norm()?;
        if n > 1e-150 {
            let t: f64 = rng.gen::<f64>() * prob.radius;
            return Ok(v.scaled(t / n));
        }
    }
}

/// Scans the damping-function conditions and samples the energy and
/// stability inequalities over the coefficient ball.
pub fn verify_ns_conditions(
    prob: &NsProblem,
    samples: usize,
    seed: u64,
) -> Result<NsConditionReport, Error> {
    if samples < 2 {
        return Err(Error::InvalidParameter { what: "need at least 2 samples" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x4e53);
    let mut checks = Vec::new();

    // Energy: <F(c), c> >= (2 nu/3 + delta) |c|_V^2, and the symmetric
    // gradient identity 2 int |Bu|^2 = int |grad u|^2 on the way.
    let mut energy_margin = f64::INFINITY;
    let mut split_margin = f64::INFINITY;
    let mut s_max = 0.0f64;
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let c = random_coefficients(&mut rng, prob)?;
        let fc = prob.apply(&c)?;
        let lhs = dot(fc.entries(), c.entries());
        let vn = prob.v_norm(&c);
        let rhs = (2.0 * prob.nu / 3.0 + prob.delta) * vn * vn;
        let scale = 1.0 + fp::abs(lhs) + rhs;
        energy_margin = fp::min(energy_margin, (lhs - rhs) / scale);

        let (twice_b, grad) = prob.symmetric_gradient_split(&c);
        split_margin =
            fp::min(split_margin, -fp::abs(twice_b - grad) / (1.0 + grad));
        // Track the shear range actually reached, for the phi scans.
        let (b2, _) = prob.symmetric_gradient_split(&c);
        s_max = fp::max(s_max, fp::sqrt(b2));
        draws.push(c);
    }
    checks.push(ConditionCheck {
        label: "energy lower bound",
        margin: energy_margin,
        pass: energy_margin >= -1e-9,
    });
    checks.push(ConditionCheck {
        label: "symmetric gradient identity",
        margin: split_margin,
        pass: split_margin >= -1e-9,
    });

    // phi bound: sup phi <= nu/3 - delta over the reached shear range.
    let cap = prob.nu / 3.0 - prob.delta;
    let t_hi = 2.0 * s_max + 1.0;
    let mut phi_margin = f64::INFINITY;
    for i in 0..=1000 {
        let t = t_hi * i as f64 / 1000.0;
        phi_margin = fp::min(phi_margin, cap - prob.phi.eval(t));
    }
    checks.push(ConditionCheck {
        label: "phi bounded by nu/3 - delta",
        margin: phi_margin,
        pass: phi_margin >= -1e-12 * (1.0 + cap),
    });

    // |phi(t) - phi(tau)| t <= (mu + phi(t)) |t - tau| on a two-way grid.
    let mut lip_margin = f64::INFINITY;
    for i in 0..=100 {
        let t = t_hi * i as f64 / 100.0;
        let pt = prob.phi.eval(t);
        for j in 0..=100 {
            let tau = t_hi * j as f64 / 100.0;
            let lhs = fp::abs(pt - prob.phi.eval(tau)) * t;
            let rhs = (prob.mu + pt) * fp::abs(t - tau);
            lip_margin = fp::min(lip_margin, (rhs - lhs) / (1.0 + rhs));
        }
    }
    checks.push(ConditionCheck {
        label: "phi increment comparison",
        margin: lip_margin,
        pass: lip_margin >= -1e-12,
    });

    // Stability: |F(c1) - F(c2)|_V* >= 3 delta |w|_V - (|u1|_4 + |u2|_4)/2 |w|_4.
    let mut stab_margin = f64::INFINITY;
    for pair in draws.chunks_exact(2) {
        let (c1, c2) = (&pair[0], &pair[1]);
        let w = c1.sub(c2)?;
        let lhs = prob.vstar_norm(&prob.apply(c1)?.sub(&prob.apply(c2)?)?)?;
        let rhs = 3.0 * prob.delta * prob.v_norm(&w)
            - 0.5 * (prob.velocity_l4(c1) + prob.velocity_l4(c2)) * prob.velocity_l4(&w);
        let scale = 1.0 + fp::abs(lhs) + fp::abs(rhs);
        stab_margin = fp::min(stab_margin, (lhs - rhs) / scale);
    }
    checks.push(ConditionCheck {
        label: "two-point stability bound",
        margin: stab_margin,
        pass: stab_margin >= -1e-9,
    });

    Ok(NsConditionReport { checks })
}

/// Solves the steady problem `F(c) = h` from rest.
pub fn solve_ns_steady(
    prob: &NsProblem,
    forcing: &Vector,
    cfg: &SolveConfig,
) -> Result<SolveTrace, Error> {
    let start = Vector::zeros(prob.space.clone());
    solve_comparison(&prob.decomposition, forcing, &start, cfg)
}

/// Per-step energy bookkeeping of the implicit Euler march. `satisfied`
/// states whether
/// `kinetic_after + dt (2 nu / 3) |c|_V^2 <= kinetic_before + dt <h, c> + slack`
/// held, with the slack covering the solver residual and roundoff.
#[derive(Debug, Clone, Copy)]
pub struct EnergyRecord {
    pub step: usize,
    pub time: f64,
    pub kinetic: f64,
    pub dissipation: f64,
    pub work: f64,
    pub slack: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolveStatus {
    Completed,
    /// The step solve failed or the energy inequality broke; the trajectory
    /// up to the previous step is returned.
    StepRejected { step: usize },
}

#[derive(Debug)]
pub struct NsEvolution {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub records: Vec<EnergyRecord>,
    pub traces: Vec<SolveTrace>,
    pub status: EvolveStatus,
}

/// Implicit Euler from rest: each step solves
/// `M (c+ - c0) / dt + F(c+) = h` by successive comparison against the
/// frozen step surrogate `M / dt + nu G`.
pub fn evolve_ns(
    prob: &NsProblem,
    forcing: &Vector,
    dt: f64,
    t_end: f64,
    cfg: &SolveConfig,
) -> Result<NsEvolution, Error> {
    cfg.validate()?;
    if !(dt.is_finite() && dt > 0.0 && t_end >= dt) {
        return Err(Error::InvalidParameter { what: "need 0 < dt <= t_end" });
    }
    let steps_f = t_end / dt;
    if steps_f > 1e4 + 1e-9 {
        return Err(Error::InvalidParameter { what: "too many steps: t_end/dt above 1e4" });
    }
    let steps = (fp::max(steps_f, 1.0) + 0.5) as usize;
    if forcing.space().dim() != prob.space.dim() {
        return Err(Error::DimensionMismatch {
            expected: prob.space.dim(),
            got: forcing.space().dim(),
        });
    }

    // Step mapping c -> M c / dt + F(c) with the frozen linear surrogate.
    let step_d = {
        let tables = prob.tables.clone();
        let phi = prob.phi.clone();
        let nu = prob.nu;
        let mass = prob.mass.clone();
        let space = prob.space.clone();
        let ball = Ball::new(Vector::zeros(prob.space.clone()), prob.radius)?;
        let space_cl = space.clone();
        let f = MappingHandle::new(
            space.clone(),
            space.clone(),
            ball,
            Arc::new(move |c: &Vector| {
                let mut out = eval_operator(&tables, &phi, nu, c.entries());
                let mc = mass.matvec(c.entries());
                for (o, m) in out.iter_mut().zip(&mc) {
                    *o += m / dt;
                }
                Vector::new(space_cl.clone(), out)
            }),
        )?;
        let mut a = prob.gram.clone();
        a.scale(prob.nu);
        let inv_dt = 1.0 / dt;
        for r in 0..a.n() {
            for c in 0..a.n() {
                a.add_to(r, c, prob.mass.at(r, c) * inv_dt);
            }
        }
        let f0 = SurrogateHandle::linear(space.clone(), space, a)?;
        Decomposition::new(f, f0)?
    };

    // The contraction factor of the step mapping is sampled once and shared
    // by every step's guard.
    let mut step_cfg = *cfg;
    if cfg.radius_guard && cfg.sigma_hint.is_none() {
        let sampler = crate::certify::SamplerConfig {
            n_sphere: 16,
            n_radii: 4,
            n_pairs: 256,
            seed: 0x6e73_6576,
        };
        if let Some(sigma) = crate::certify::estimate_contraction(&step_d, &sampler)?.sigma {
            step_cfg.sigma_hint = Some(sigma);
        }
    }

    let mut times = vec![0.0];
    let mut states = vec![Vector::zeros(prob.space.clone())];
    let mut records = Vec::with_capacity(steps);
    let mut traces = Vec::with_capacity(steps);
    let mut status = EvolveStatus::Completed;

    for step in 1..=steps {
        let c0 = states.last().expect("nonempty").clone();
        let mc0 = prob.mass.matvec(c0.entries());
        let target_entries: Vec<f64> = forcing
            .entries()
            .iter()
            .zip(&mc0)
            .map(|(h, m)| h + m / dt)
            .collect();
        let target = Vector::new(prob.space.clone(), target_entries)?;

        let trace = solve_comparison(&step_d, &target, &c0, &step_cfg)?;
        let converged = trace.outcome.converged().map(|(x, r)| (x.clone(), r));
        traces.push(trace);
        let (c1, residual) = match converged {
            Some(pair) => pair,
            None => {
                status = EvolveStatus::StepRejected { step };
                break;
            }
        };

        let kin0 = 0.5 * dot(&prob.mass.matvec(c0.entries()), c0.entries());
        let kin1 = 0.5 * dot(&prob.mass.matvec(c1.entries()), c1.entries());
        let vn = prob.v_norm(&c1);
        let dissipation = dt * (2.0 * prob.nu / 3.0) * vn * vn;
        let work = dt * dot(forcing.entries(), c1.entries());
        let c1_l2 = {
            let mut acc = 0.0;
            for v in c1.entries() {
                acc += v * v;
            }
            fp::sqrt(acc)
        };
        let slack =
            dt * residual * c1_l2 * (1.0 + 1e-6) + 1e-12 * (1.0 + kin0 + fp::abs(work));
        let satisfied = kin1 + dissipation <= kin0 + work + slack;
        records.push(EnergyRecord {
            step,
            time: step as f64 * dt,
            kinetic: kin1,
            dissipation,
            work,
            slack,
            satisfied,
        });
        if !satisfied {
            status = EvolveStatus::StepRejected { step };
            break;
        }
        times.push(step as f64 * dt);
        states.push(c1);
    }

    Ok(NsEvolution { times, states, records, traces, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_problem(modes: usize) -> NsProblem {
        build_ns(&NsConfig { modes, radius: 4.0, ..NsConfig::default() }).unwrap()
    }

    #[test]
    fn divergence_vanishes_identically() {
        // g22 = -g11 by construction; check through the public split: for a
        // random coefficient vector the trace term contributes nothing.
        let prob = small_problem(4);
        let c = Vector::new(prob.coefficient_space().clone(), vec![0.7, -0.3, 0.2, 1.1]).unwrap();
        let (twice_b, grad) = prob.symmetric_gradient_split(&c);
        assert!((twice_b - grad).abs() <= 1e-12 * (1.0 + grad));
    }

    #[test]
    fn gram_and_mass_are_spd() {
        let prob = small_problem(6);
        for m in [prob.gram(), prob.mass()] {
            for r in 0..6 {
                for c in 0..6 {
                    assert!((m.at(r, c) - m.at(c, r)).abs() < 1e-15);
                }
            }
        }
        let c = Vector::new(prob.coefficient_space().clone(), vec![0.1; 6]).unwrap();
        assert!(prob.v_norm(&c) > 0.0);
        assert!(prob.velocity_l2(&c) > 0.0);
    }

    #[test]
    fn under_resolved_quadrature_is_rejected() {
        let err = build_ns(&NsConfig {
            modes: 8,
            quad_points: Some(4),
            ..NsConfig::default()
        });
        assert!(matches!(err, Err(Error::QuadratureUnderResolved { .. })));
    }

    #[test]
    fn conditions_hold_for_the_default_preset() {
        let prob = small_problem(8);
        let report = verify_ns_conditions(&prob, 64, 11).unwrap();
        for check in &report.checks {
            assert!(check.pass, "{} failed with margin {}", check.label, check.margin);
        }
    }

    #[test]
    fn steady_solve_matches_newton_oracle() {
        let prob = small_problem(4);
        let h = prob
            .forcing_from_field(|x, y| {
                let s = (core::f64::consts::PI * x).sin() * (core::f64::consts::PI * y).sin();
                (0.02 * s, -0.01 * s)
            })
            .unwrap();
        let trace = solve_ns_steady(&prob, &h, &SolveConfig::default()).unwrap();
        let (c, _) = trace.outcome.converged().expect("converged");

        // Oracle: damped Newton on F(c) - h with a forward-difference
        // Jacobian, fully independent of the comparison loop.
        let k = 4;
        let mut x = vec![0.0f64; k];
        for _ in 0..60 {
            let space = prob.coefficient_space().clone();
            let fx = prob.apply(&Vector::new(space.clone(), x.clone()).unwrap()).unwrap();
            let r: Vec<f64> = fx.entries().iter().zip(h.entries()).map(|(a, b)| a - b).collect();
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn < 1e-12 {
                break;
            }
            let mut jac = DenseMatrix::zeros(k);
            for col in 0..k {
                let hstep = 1e-7 * (1.0 + x[col].abs());
                let mut xp = x.clone();
                xp[col] += hstep;
                let fp_ = prob.apply(&Vector::new(space.clone(), xp).unwrap()).unwrap();
                for row in 0..k {
                    jac.set(row, col, (fp_.entries()[row] - fx.entries()[row]) / hstep);
                }
            }
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let dx = LuFactors::factor(&jac).unwrap().solve(&neg).unwrap();
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        for (a, b) in c.entries().iter().zip(&x) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn evolution_decays_without_forcing() {
        let prob = small_problem(4);
        let h = Vector::zeros(prob.coefficient_space().clone());
        // zero forcing from rest stays at rest and every record is trivial
        let evo = evolve_ns(&prob, &h, 0.25, 2.0, &SolveConfig::default()).unwrap();
        assert_eq!(evo.status, EvolveStatus::Completed);
        assert_eq!(evo.states.len(), 9);
        for r in &evo.records {
            assert!(r.satisfied);
            assert!(r.kinetic.abs() < 1e-18);
        }
    }

    #[test]
    fn forced_evolution_approaches_the_steady_state() {
        let prob = small_problem(4);
        let h = prob
            .forcing_from_field(|x, y| {
                let s = (core::f64::consts::PI * x).sin() * (core::f64::consts::PI * y).sin();
                (0.02 * s, 0.0)
            })
            .unwrap();
        let steady = solve_ns_steady(&prob, &h, &SolveConfig::default()).unwrap();
        let (c_star, _) = steady.outcome.converged().expect("steady converged");

        let evo = evolve_ns(&prob, &h, 0.5, 12.0, &SolveConfig::default()).unwrap();
        assert_eq!(evo.status, EvolveStatus::Completed);
        for r in &evo.records {
            assert!(r.satisfied, "energy inequality broke at step {}", r.step);
        }
        let last = evo.states.last().unwrap();
        let gap = last.sub(c_star).unwrap().norm().unwrap();
        assert!(gap < 1e-4, "gap to steady state {gap}");
    }
}
