//! Successive comparison: solve `f(x) = y` by repeatedly inverting the
//! surrogate against a running defect.
//!
//! One step of the loop solves `f0(x_m) = f0(x_{m-1}) + y_{m-1}` and then
//! charges the full mapping for what the surrogate missed,
//! `y_m = y_{m-1} - (f(x_m) - f(x_{m-1}))`. Telescoping makes
//! `y_m = yhat - (f(x_m) - f(x_start))` with `yhat = y - f(x_start)`, so
//! `||y_m||` is the true residual; the loop tracks the float defect of that
//! identity and stores the worst value seen.
//!
//! The radius guard refuses targets the contraction argument cannot carry to
//! a solution inside the ball: it needs `||yhat||` at most
//! `0.99 (1 - sigma) nu`, where `nu` is the surrogate's coercivity sampled at
//! the effective radius around the start point. For an identity surrogate
//! `nu` equals the radius and the bound reduces to the familiar
//! `0.99 (1 - sigma) r`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::certify;
use crate::operators::{Decomposition, MappingHandle, SurrogateHandle};
use crate::spaces::Vector;
use crate::Error;

/// Deterministic sampler used when the guard has to estimate `sigma` or the
/// coercivity itself.
const GUARD_SEED: u64 = 0x6772_6431;
const GUARD_SPHERE: usize = 32;
const GUARD_PAIRS: usize = 512;

#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    /// Residual target in the codomain norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Refuse targets outside the certified reach of the ball.
    pub radius_guard: bool,
    /// Contraction factor to trust instead of sampling one.
    pub sigma_hint: Option<f64>,
    /// Iteration block length for the divergence check.
    pub m0_hint: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_iter: 256,
            radius_guard: true,
            sigma_hint: None,
            m0_hint: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter { what: "tol must be positive" });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter { what: "max_iter must be at least 1" });
        }
        if let Some(s) = self.sigma_hint {
            if !(s >= 0.0 && s < 1.0) {
                return Err(Error::InvalidParameter { what: "sigma_hint must lie in [0, 1)" });
            }
        }
        if self.m0_hint == Some(0) {
            return Err(Error::InvalidParameter { what: "m0_hint must be at least 1" });
        }
        Ok(())
    }
}

/// One row of the iteration history.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub m: usize,
    /// `||y_m||`, the defect still to be absorbed.
    pub res_norm: f64,
    /// `||f0(x_m) - f0(x_{m-1})||`, the surrogate increment.
    pub df0_norm: f64,
    /// `||x_m - x_{m-1}||` in the domain norm.
    pub step_norm: f64,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Converged {
        x: Vector,
        residual: f64,
    },
    /// Residuals grew against the `m0`-lagged comparison three blocks in a
    /// row, or the guard's sampling found no contraction at all.
    NonContractive {
        at_iteration: usize,
        window: usize,
        ratio: f64,
    },
    /// The next iterate fell outside the trusted ball; it is returned
    /// unevaluated.
    LeftBall {
        x: Vector,
    },
    MaxIter {
        x: Vector,
        residual: f64,
    },
    /// The surrogate inversion gave up.
    SurrogateFailure {
        at_iteration: usize,
    },
    /// Two re-anchorings in a row without meaningful residual decrease.
    PatchStall {
        x: Vector,
        residual: f64,
    },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Converged { .. } => "converged",
            Outcome::NonContractive { .. } => "non-contractive",
            Outcome::LeftBall { .. } => "left-ball",
            Outcome::MaxIter { .. } => "max-iter",
            Outcome::SurrogateFailure { .. } => "surrogate-failure",
            Outcome::PatchStall { .. } => "patch-stall",
        }
    }

    pub fn converged(&self) -> Option<(&Vector, f64)> {
        match self {
            Outcome::Converged { x, residual } => Some((x, *residual)),
            _ => None,
        }
    }

    /// The last point the solver held, for outcomes that carry one.
    pub fn final_point(&self) -> Option<&Vector> {
        match self {
            Outcome::Converged { x, .. }
            | Outcome::LeftBall { x }
            | Outcome::MaxIter { x, .. }
            | Outcome::PatchStall { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Outcome::Converged { .. })
    }
}

/// Full history of one solve.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub outcome: Outcome,
    /// `||y - f(x_start)||`.
    pub shift_norm: f64,
    /// Worst observed defect of the telescoping identity, scaled check
    /// against `1e-10 (1 + ||yhat||)` is the caller's business.
    pub telescoping_defect: f64,
    /// Number of re-anchorings (always 0 outside the patched driver).
    pub reanchor_count: usize,
}

struct LoopState {
    x: Vector,
    fx: Vector,
    f0x: Vector,
    y: Vector,
    res_norm: f64,
    growth_streak: usize,
}

/// Shared inner loop. Returns the outcome and updates records and the defect
/// tracker in place. `anchor_f` and `anchor_y` define the telescoping
/// reference (`yhat = anchor_y - f(anchor)`).
#[allow(clippy::too_many_arguments)]
fn comparison_loop(
    d: &Decomposition,
    state: &mut LoopState,
    yhat: &Vector,
    f_anchor: &Vector,
    cfg: &SolveConfig,
    records: &mut Vec<IterationRecord>,
    defect: &mut f64,
    m_offset: usize,
    budget: usize,
) -> Result<Option<Outcome>, Error> {
    let ball = d.f().ball();
    let m0 = cfg.m0_hint.unwrap_or(1);
    let yhat_norm = yhat.norm()?;

    for local in 0..budget {
        let m = m_offset + local + 1;
        // Solve f0(x_m) = f0(x_{m-1}) + y_{m-1}.
        let z = state.f0x.add(&state.y)?;
        let x_next = match d.f0().solve(&z, &state.x) {
            Ok(x) => x,
            Err(
                Error::SurrogateSolveFailed { .. }
                | Error::SingularJacobian { .. }
                | Error::OutOfDomain { .. },
            ) => {
                return Ok(Some(Outcome::SurrogateFailure { at_iteration: m }));
            }
            Err(e) => return Err(e),
        };
        let step_norm = x_next.dist(&state.x)?;

        // Ball check comes before any evaluation of f at the new point.
        if ball.distance(&x_next)? > ball.radius() * (1.0 + 1e-9) {
            return Ok(Some(Outcome::LeftBall { x: x_next }));
        }

        let f_next = d.f().eval(&x_next)?;
        let f0_next = d.f0().eval(&x_next)?;
        let df0_norm = f0_next.sub(&state.f0x)?.norm()?;
        let y_next = state.y.sub(&f_next.sub(&state.fx)?)?;
        let res_norm = y_next.norm()?;

        // Defect of yhat - y_m = f(x_m) - f(anchor).
        let lhs = yhat.sub(&y_next)?;
        let rhs = f_next.sub(f_anchor)?;
        *defect = crate::fp::max(*defect, lhs.sub(&rhs)?.norm()?);

        records.push(IterationRecord { m, res_norm, df0_norm, step_norm });

        state.x = x_next;
        state.fx = f_next;
        state.f0x = f0_next;
        state.y = y_next;
        state.res_norm = res_norm;

        if res_norm <= cfg.tol {
            return Ok(Some(Outcome::Converged { x: state.x.clone(), residual: res_norm }));
        }

        // Divergence: residual above its m0-lagged predecessor three times
        // in a row. The lag-0 reference is the shift norm itself.
        let reference = if records.len() > m0 {
            records[records.len() - 1 - m0].res_norm
        } else if records.len() == m0 {
            yhat_norm
        } else {
            f64::INFINITY
        };
        if res_norm > reference {
            state.growth_streak += 1;
            if state.growth_streak >= 3 {
                return Ok(Some(Outcome::NonContractive {
                    at_iteration: m,
                    window: m0,
                    ratio: res_norm / reference,
                }));
            }
        } else {
            state.growth_streak = 0;
        }
    }
    Ok(None)
}

/// Guard bookkeeping: either the hinted sigma or a sampled contraction fit,
/// plus the coercivity of the surrogate at the effective radius.
fn radius_guard(
    d: &Decomposition,
    x_start: &Vector,
    shift_norm: f64,
    cfg: &SolveConfig,
) -> Result<Option<Outcome>, Error> {
    let ball = d.f().ball();
    let r_eff = ball.radius() - ball.distance(x_start)?;
    if r_eff <= 0.0 {
        return Err(Error::RadiusGuard { shift_norm, certified: 0.0 });
    }
    let sigma = match cfg.sigma_hint {
        Some(s) => s,
        None => {
            let sampler = certify::SamplerConfig {
                n_sphere: GUARD_SPHERE,
                n_radii: 8,
                n_pairs: GUARD_PAIRS,
                seed: GUARD_SEED,
            };
            let est = certify::estimate_contraction(d, &sampler)?;
            match est.sigma {
                Some(s) => s,
                None => {
                    let ratio = est
                        .envelope
                        .iter()
                        .map(|&(edge, v)| v / edge)
                        .fold(0.0f64, crate::fp::max);
                    return Ok(Some(Outcome::NonContractive {
                        at_iteration: 0,
                        window: 0,
                        ratio,
                    }));
                }
            }
        }
    };
    let nu = certify::coercivity_at_radius(d, x_start, r_eff, GUARD_SPHERE, GUARD_SEED)?;
    let certified = 0.99 * (1.0 - sigma) * nu;
    if !(shift_norm <= certified) {
        return Err(Error::RadiusGuard { shift_norm, certified });
    }
    Ok(None)
}

/// Drives the comparison iteration for `f(x) = y` from `x_start`.
///
/// Hard errors are reserved for precondition violations (bad config, start
/// point outside the ball, dimension mismatches, guard refusal); everything
/// the iteration itself can decide comes back in-band as the trace outcome.
pub fn solve_comparison(
    d: &Decomposition,
    y: &Vector,
    x_start: &Vector,
    cfg: &SolveConfig,
) -> Result<SolveTrace, Error> {
    cfg.validate()?;
    if y.space().dim() != d.f().codomain().dim() {
        return Err(Error::DimensionMismatch {
            expected: d.f().codomain().dim(),
            got: y.space().dim(),
        });
    }
    let f_start = d.f().eval(x_start)?;
    let yhat = y.sub(&f_start)?;
    let shift_norm = yhat.norm()?;

    if shift_norm <= cfg.tol {
        return Ok(SolveTrace {
            records: Vec::new(),
            outcome: Outcome::Converged { x: x_start.clone(), residual: shift_norm },
            shift_norm,
            telescoping_defect: 0.0,
            reanchor_count: 0,
        });
    }

    if cfg.radius_guard {
        if let Some(outcome) = radius_guard(d, x_start, shift_norm, cfg)? {
            return Ok(SolveTrace {
                records: Vec::new(),
                outcome,
                shift_norm,
                telescoping_defect: 0.0,
                reanchor_count: 0,
            });
        }
    }

    let f0_start = d.f0().eval(x_start)?;
    let mut state = LoopState {
        x: x_start.clone(),
        fx: f_start.clone(),
        f0x: f0_start,
        y: yhat.clone(),
        res_norm: shift_norm,
        growth_streak: 0,
    };
    let mut records = Vec::new();
    let mut defect = 0.0;
    let outcome = comparison_loop(
        d,
        &mut state,
        &yhat,
        &f_start,
        cfg,
        &mut records,
        &mut defect,
        0,
        cfg.max_iter,
    )?
    .unwrap_or(Outcome::MaxIter { x: state.x.clone(), residual: state.res_norm });

    Ok(SolveTrace {
        records,
        outcome,
        shift_norm,
        telescoping_defect: defect,
        reanchor_count: 0,
    })
}

/// Fixed-point driver: solves `x - f1(x) = y` with the identity surrogate,
/// so a converged result is a fixed point of `f1 + y`.
pub fn solve_fixed_point(
    f1: &MappingHandle,
    y: &Vector,
    x_start: &Vector,
    cfg: &SolveConfig,
) -> Result<SolveTrace, Error> {
    if f1.domain().dim() != f1.codomain().dim() {
        return Err(Error::DimensionMismatch {
            expected: f1.domain().dim(),
            got: f1.codomain().dim(),
        });
    }
    let inner = f1.clone();
    let f = MappingHandle::new(
        f1.domain().clone(),
        f1.domain().clone(),
        f1.ball().clone(),
        Arc::new(move |x: &Vector| x.sub(&inner.eval(x)?)),
    )?;
    let d = Decomposition::new(f, SurrogateHandle::identity(f1.domain().clone()))?;
    solve_comparison(&d, y, x_start, cfg)
}

/// Walks targets beyond a single surrogate's reach by re-anchoring: the
/// iterate is clamped to a patch ball around the current anchor, and whenever
/// it lands on the patch boundary a fresh surrogate is built there by
/// `factory` and the defect is restarted from an exact evaluation.
///
/// The patch radius defaults to a quarter of the mapping's ball radius. Two
/// consecutive re-anchorings that fail to cut the residual by at least a
/// relative 1e-3 stop the walk as [`Outcome::PatchStall`]. The radius guard
/// does not apply here; progress control is the stall detector.
pub fn solve_patched(
    f: &MappingHandle,
    factory: &dyn Fn(&Vector) -> Result<SurrogateHandle, Error>,
    y: &Vector,
    x_start: &Vector,
    cfg: &SolveConfig,
    patch_radius: Option<f64>,
) -> Result<SolveTrace, Error> {
    cfg.validate()?;
    let r_patch = match patch_radius {
        Some(r) if r.is_finite() && r > 0.0 => r,
        Some(_) => return Err(Error::InvalidParameter { what: "patch radius must be positive" }),
        None => f.ball().radius() / 4.0,
    };

    let mut anchor = x_start.clone();
    let mut surrogate = factory(&anchor)?;
    let mut d = Decomposition::new(f.clone(), surrogate)?;

    let f_anchor0 = f.eval(&anchor)?;
    let shift_norm = y.sub(&f_anchor0)?.norm()?;

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut defect = 0.0;
    let mut reanchors = 0usize;
    let mut stall_streak = 0usize;

    let mut f_anchor = f_anchor0;
    let mut yhat = y.sub(&f_anchor)?;
    let mut res_at_anchor = yhat.norm()?;

    let mut state = LoopState {
        x: anchor.clone(),
        fx: f_anchor.clone(),
        f0x: d.f0().eval(&anchor)?,
        y: yhat.clone(),
        res_norm: res_at_anchor,
        growth_streak: 0,
    };

    if res_at_anchor <= cfg.tol {
        return Ok(SolveTrace {
            records,
            outcome: Outcome::Converged { x: anchor, residual: res_at_anchor },
            shift_norm,
            telescoping_defect: 0.0,
            reanchor_count: 0,
        });
    }

    let ball = f.ball();
    let m0 = cfg.m0_hint.unwrap_or(1);
    let mut m = 0usize;
    while m < cfg.max_iter {
        m += 1;
        let z = state.f0x.add(&state.y)?;
        let mut x_next = match d.f0().solve(&z, &state.x) {
            Ok(x) => x,
            Err(
                Error::SurrogateSolveFailed { .. }
                | Error::SingularJacobian { .. }
                | Error::OutOfDomain { .. },
            ) => {
                return Ok(SolveTrace {
                    records,
                    outcome: Outcome::SurrogateFailure { at_iteration: m },
                    shift_norm,
                    telescoping_defect: defect,
                    reanchor_count: reanchors,
                });
            }
            Err(e) => return Err(e),
        };

        // Clamp to the patch boundary along the segment from the previous
        // iterate, which always lies inside the patch.
        let mut hit_boundary = false;
        if x_next.dist(&anchor)? > r_patch {
            let dir = x_next.sub(&state.x)?;
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let trial = state.x.add_scaled(&dir, mid)?;
                if trial.dist(&anchor)? > r_patch {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            x_next = state.x.add_scaled(&dir, lo)?;
            hit_boundary = true;
        }

        let step_norm = x_next.dist(&state.x)?;
        if ball.distance(&x_next)? > ball.radius() * (1.0 + 1e-9) {
            return Ok(SolveTrace {
                records,
                outcome: Outcome::LeftBall { x: x_next },
                shift_norm,
                telescoping_defect: defect,
                reanchor_count: reanchors,
            });
        }

        let f_next = f.eval(&x_next)?;
        let f0_next = d.f0().eval(&x_next)?;
        let df0_norm = f0_next.sub(&state.f0x)?.norm()?;
        let y_next = state.y.sub(&f_next.sub(&state.fx)?)?;
        let res_norm = y_next.norm()?;

        let lhs = yhat.sub(&y_next)?;
        let rhs = f_next.sub(&f_anchor)?;
        defect = crate::fp::max(defect, lhs.sub(&rhs)?.norm()?);

        records.push(IterationRecord { m, res_norm, df0_norm, step_norm });

        state.x = x_next;
        state.fx = f_next;
        state.f0x = f0_next;
        state.y = y_next;

        if res_norm <= cfg.tol {
            return Ok(SolveTrace {
                records,
                outcome: Outcome::Converged { x: state.x.clone(), residual: res_norm },
                shift_norm,
                telescoping_defect: defect,
                reanchor_count: reanchors,
            });
        }

        // Divergence check against the m0-lagged residual within this run.
        if records.len() > m0 {
            let reference = records[records.len() - 1 - m0].res_norm;
            if res_norm > reference {
                state.growth_streak += 1;
                if state.growth_streak >= 3 {
                    return Ok(SolveTrace {
                        records,
                        outcome: Outcome::NonContractive {
                            at_iteration: m,
                            window: m0,
                            ratio: res_norm / reference,
                        },
                        shift_norm,
                        telescoping_defect: defect,
                        reanchor_count: reanchors,
                    });
                }
            } else {
                state.growth_streak = 0;
            }
        }

        if hit_boundary {
            let rel = (res_at_anchor - res_norm) / res_at_anchor;
            if rel < 1e-3 {
                stall_streak += 1;
                if stall_streak >= 2 {
                    return Ok(SolveTrace {
                        records,
                        outcome: Outcome::PatchStall { x: state.x.clone(), residual: res_norm },
                        shift_norm,
                        telescoping_defect: defect,
                        reanchor_count: reanchors,
                    });
                }
            } else {
                stall_streak = 0;
            }
            // Re-anchor: fresh surrogate and an exact defect restart.
            anchor = state.x.clone();
            surrogate = match factory(&anchor) {
                Ok(s) => s,
                Err(
                    Error::SurrogateSolveFailed { .. }
                    | Error::SingularJacobian { .. }
                    | Error::OutOfDomain { .. },
                ) => {
                    return Ok(SolveTrace {
                        records,
                        outcome: Outcome::SurrogateFailure { at_iteration: m },
                        shift_norm,
                        telescoping_defect: defect,
                        reanchor_count: reanchors,
                    });
                }
                Err(e) => return Err(e),
            };
            d = Decomposition::new(f.clone(), surrogate)?;
            reanchors += 1;
            f_anchor = state.fx.clone();
            yhat = y.sub(&f_anchor)?;
            res_at_anchor = yhat.norm()?;
            state.y = yhat.clone();
            state.f0x = d.f0().eval(&anchor)?;
            state.growth_streak = 0;
        }
    }

    Ok(SolveTrace {
        records,
        outcome: Outcome::MaxIter { x: state.x.clone(), residual: state.res_norm },
        shift_norm,
        telescoping_defect: defect,
        reanchor_count: reanchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::operators::Ball;
    use crate::spaces::SpaceDescriptor;
    use alloc::vec;

    fn euclid(dim: usize) -> SpaceDescriptor {
        SpaceDescriptor::euclidean(dim)
    }

    fn decomposition_pointwise(
        dim: usize,
        radius: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Decomposition {
        let ball = Ball::new(Vector::zeros(euclid(dim)), radius).unwrap();
        let f = MappingHandle::from_pointwise(euclid(dim), ball, f).unwrap();
        Decomposition::new(f, SurrogateHandle::identity(euclid(dim))).unwrap()
    }

    #[test]
    fn exact_surrogate_converges_in_one_step() {
        // f = f0 = 2x: the first corrected point already solves the system.
        let space = euclid(3);
        let ball = Ball::new(Vector::zeros(space.clone()), 8.0).unwrap();
        let f = MappingHandle::from_pointwise(space.clone(), ball, |t| 2.0 * t).unwrap();
        let mut m = DenseMatrix::identity(3);
        m.scale(2.0);
        let d = Decomposition::new(f, SurrogateHandle::linear(space.clone(), space.clone(), m).unwrap())
            .unwrap();
        let y = Vector::new(euclid(3), vec![1.0, -2.0, 0.5]).unwrap();
        let trace =
            solve_comparison(&d, &y, &Vector::zeros(euclid(3)), &SolveConfig::default()).unwrap();
        let (x, res) = trace.outcome.converged().expect("converged");
        assert_eq!(trace.records.len(), 1);
        assert!(res <= 1e-10);
        for (xi, yi) in x.entries().iter().zip(y.entries()) {
            assert!((xi - yi / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sin_perturbation_converges_geometrically() {
        let d = decomposition_pointwise(4, 8.0, |t| t + 0.25 * t.sin());
        let y = Vector::new(euclid(4), vec![1.0, -0.5, 0.25, 2.0]).unwrap();
        let trace =
            solve_comparison(&d, &y, &Vector::zeros(euclid(4)), &SolveConfig::default()).unwrap();
        let (x, _) = trace.outcome.converged().expect("converged");
        let fx = d.f().eval(x).unwrap();
        assert!(fx.sub(&y).unwrap().norm().unwrap() <= 1e-10);
        // Residuals decay at worst like 0.26 per step.
        for w in trace.records.windows(2) {
            assert!(w[1].res_norm <= 0.26 * w[0].res_norm + 1e-14);
        }
        assert!(trace.telescoping_defect <= 1e-10 * (1.0 + trace.shift_norm));
    }

    #[test]
    fn negation_reports_non_contractive() {
        let d = decomposition_pointwise(2, 16.0, |t| -t);
        let y = Vector::new(euclid(2), vec![0.5, 0.5]).unwrap();
        // Guard off so the loop itself must make the call.
        let cfg = SolveConfig { radius_guard: false, ..SolveConfig::default() };
        let trace = solve_comparison(&d, &y, &Vector::zeros(euclid(2)), &cfg).unwrap();
        match trace.outcome {
            Outcome::NonContractive { at_iteration, .. } => assert_eq!(at_iteration, 3),
            other => panic!("expected non-contractive, got {other:?}"),
        }
    }

    #[test]
    fn negation_is_refused_by_the_guard_as_well() {
        let d = decomposition_pointwise(2, 16.0, |t| -t);
        let y = Vector::new(euclid(2), vec![0.5, 0.5]).unwrap();
        let trace =
            solve_comparison(&d, &y, &Vector::zeros(euclid(2)), &SolveConfig::default()).unwrap();
        match trace.outcome {
            Outcome::NonContractive { at_iteration, .. } => assert_eq!(at_iteration, 0),
            other => panic!("expected non-contractive, got {other:?}"),
        }
    }

    #[test]
    fn guard_rejects_targets_beyond_reach() {
        let d = decomposition_pointwise(2, 1.0, |t| t + 0.25 * t.sin());
        let y = Vector::new(euclid(2), vec![40.0, 0.0]).unwrap();
        let err = solve_comparison(&d, &y, &Vector::zeros(euclid(2)), &SolveConfig::default());
        assert!(matches!(err, Err(Error::RadiusGuard { .. })));
    }

    #[test]
    fn dottie_fixed_point() {
        // x = cos x has the unique root 0.739..; through the half-amplitude
        // fixture: x = 0.5 cos x at 0.45018361129487355.
        let space = euclid(1);
        let ball = Ball::new(Vector::zeros(space.clone()), 4.0).unwrap();
        let f1 = MappingHandle::from_pointwise(space.clone(), ball, |t| 0.5 * t.cos()).unwrap();
        let y = Vector::zeros(space.clone());
        let trace =
            solve_fixed_point(&f1, &y, &Vector::zeros(space), &SolveConfig::default()).unwrap();
        let (x, _) = trace.outcome.converged().expect("converged");
        // Oracle: plain iteration x <- 0.5 cos x from 0, far past convergence.
        let mut t = 0.0f64;
        for _ in 0..200 {
            t = 0.5 * t.cos();
        }
        assert!((x.entries()[0] - t).abs() < 1e-10);
        assert!((t - 0.450_183_611_294_873_6).abs() < 1e-12);
    }

    #[test]
    fn patched_walk_reaches_far_targets() {
        // Target far beyond one patch: ||y|| = 10 against a mapping whose
        // useful linearization changes along the way.
        let space = euclid(2);
        let ball = Ball::new(Vector::zeros(space.clone()), 64.0).unwrap();
        let f = MappingHandle::from_pointwise(space.clone(), ball, |t| t + 0.25 * t.sin()).unwrap();
        let factory = |x0: &Vector| SurrogateHandle::frozen_jacobian(&f, x0, None);
        let y = Vector::new(euclid(2), vec![10.0, -10.0]).unwrap();
        let cfg = SolveConfig { max_iter: 400, ..SolveConfig::default() };
        let trace = solve_patched(&f, &factory, &y, &Vector::zeros(space), &cfg, None).unwrap();
        let (x, _) = trace.outcome.converged().expect("converged");
        let fx = f.eval(x).unwrap();
        assert!(fx.sub(&y).unwrap().norm().unwrap() <= 1e-10);
    }

    #[test]
    fn patched_stalls_on_unreachable_targets() {
        // f is bounded: |f| < 1.5708, so y = 3 is unreachable and the walk
        // must stall instead of wandering.
        let space = euclid(1);
        let ball = Ball::new(Vector::zeros(space.clone()), 1e6).unwrap();
        let f = MappingHandle::from_pointwise(space.clone(), ball, |t| t.atan()).unwrap();
        let factory = |x0: &Vector| SurrogateHandle::frozen_jacobian(&f, x0, None);
        let y = Vector::new(euclid(1), vec![3.0]).unwrap();
        let cfg = SolveConfig { max_iter: 2000, ..SolveConfig::default() };
        let trace = solve_patched(&f, &factory, &y, &Vector::zeros(space), &cfg, Some(0.5)).unwrap();
        match trace.outcome {
            Outcome::PatchStall { .. } | Outcome::NonContractive { .. } => {}
            other => panic!("expected stall, got {other:?}"),
        }
        assert!(trace.reanchor_count >= 1 || !trace.records.is_empty());
    }

    #[test]
    fn zero_shift_returns_immediately() {
        let d = decomposition_pointwise(2, 4.0, |t| t + 0.25 * t.sin());
        let x0 = Vector::new(euclid(2), vec![0.3, -0.2]).unwrap();
        let y = d.f().eval(&x0).unwrap();
        let trace = solve_comparison(&d, &y, &x0, &SolveConfig::default()).unwrap();
        assert!(trace.outcome.is_converged());
        assert!(trace.records.is_empty());
    }
}
