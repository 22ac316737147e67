//! Sampled certification of a decomposition on its ball.
//!
//! Everything here is evidence, not proof: each estimator draws a fixed,
//! seed-determined set of points and reports the observed extremes. The
//! report therefore carries the seed, the verdict, and a list of standing
//! gaps that no amount of sampling closes.
//!
//! Probe directions pair increments in the codomain against the domain. When
//! the codomain is the declared dual of the domain the increment `x - x0` is
//! itself the probe; otherwise the duality image `J(x - x0)` stands in. Both
//! reduce to the same formula on Euclidean space.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fp;
use crate::operators::Decomposition;
use crate::spaces::{dot, Vector};
use crate::Error;

const TAG_GROWTH: u64 = 1;
const TAG_COERCIVITY: u64 = 2;
const TAG_COMPARISON: u64 = 3;
const TAG_CONTRACTION: u64 = 4;
const TAG_STABILITY: u64 = 5;
const TAG_MEMBERSHIP: u64 = 6;

/// How much to sample. Defaults favor the report over speed.
#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    /// Directions per radius level.
    pub n_sphere: usize,
    /// Radius levels between 0 (exclusive) and the ball radius (inclusive).
    pub n_radii: usize,
    /// Point pairs for the two-point estimators.
    pub n_pairs: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { n_sphere: 64, n_radii: 16, n_pairs: 4096, seed: 0 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_sphere == 0 || self.n_radii == 0 || self.n_pairs < 2 {
            return Err(Error::InvalidParameter {
                what: "sampler needs n_sphere >= 1, n_radii >= 1, n_pairs >= 2",
            });
        }
        Ok(())
    }

    fn rng(&self, tag: u64) -> ChaCha8Rng {
        // Distinct deterministic stream per estimator, stable across runs.
        ChaCha8Rng::seed_from_u64(
            self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag),
        )
    }
}

/// Standard normal via Box-Muller; uniform draws come from the seeded stream.
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

/// A unit direction (in the domain norm) with Gaussian-isotropic law.
fn unit_direction(rng: &mut ChaCha8Rng, like: &Vector) -> Result<Vector, Error> {
    loop {
        let entries: Vec<f64> = (0..like.space().dim()).map(|_| gaussian(rng)).collect();
        let v = Vector::new(like.space().clone(), entries)?;
        let n = v.norm()?;
        if n > 1e-150 {
            return Ok(v.scaled(1.0 / n));
        }
    }
}

/// Point on the sphere of radius `t` around the ball center.
fn sphere_point(rng: &mut ChaCha8Rng, center: &Vector, t: f64) -> Result<Vector, Error> {
    let dir = unit_direction(rng, center)?;
    center.add_scaled(&dir, t)
}

/// Point uniform-in-radius inside the ball.
fn interior_point(rng: &mut ChaCha8Rng, center: &Vector, radius: f64) -> Result<Vector, Error> {
    let t: f64 = rng.gen::<f64>() * radius;
    sphere_point(rng, center, t)
}

/// Pairing of a codomain increment against the probe for `x - x0`,
/// normalized by `||x - x0||`. See the module notes on probe selection.
fn probe_pairing(d: &Decomposition, dx: &Vector, increment: &Vector) -> Result<f64, Error> {
    let n = dx.norm()?;
    if n == 0.0 {
        return Err(Error::InvalidParameter { what: "probe at the center is undefined" });
    }
    let raw = if d.f().codomain().is_dual_of(d.f().domain()) {
        dot(increment.entries(), dx.entries())
    } else {
        let j = dx.duality_map()?;
        dot(increment.entries(), j.entries())
    };
    Ok(raw / n)
}

fn radius_levels(radius: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|j| radius * (j as f64) / (n as f64)).collect()
}

/// Growth envelope: per radius level, the largest observed `||f(x) - f(x0)||`,
/// regularized to be nondecreasing in the radius.
pub fn estimate_growth_mu(
    d: &Decomposition,
    cfg: &SamplerConfig,
) -> Result<Vec<(f64, f64)>, Error> {
    cfg.validate()?;
    let mut rng = cfg.rng(TAG_GROWTH);
    let ball = d.f().ball();
    let f0x = d.f().eval(ball.center())?;
    let mut table = Vec::with_capacity(cfg.n_radii);
    let mut running = 0.0f64;
    for t in radius_levels(ball.radius(), cfg.n_radii) {
        let mut level = 0.0f64;
        for _ in 0..cfg.n_sphere {
            let x = sphere_point(&mut rng, ball.center(), t)?;
            let diff = d.f().eval(&x)?.sub(&f0x)?;
            level = fp::max(level, diff.norm()?);
        }
        running = fp::max(running, level);
        table.push((t, running));
    }
    Ok(table)
}

/// Coercivity table for the surrogate, plus its value at the full radius.
#[derive(Debug, Clone)]
pub struct CoercivityEstimate {
    /// `(t, min over the t-sphere of the probe pairing of f0 increments)`.
    pub table: Vec<(f64, f64)>,
    /// Table value at the outermost level.
    pub delta0: f64,
}

pub fn estimate_coercivity_nu(
    d: &Decomposition,
    cfg: &SamplerConfig,
) -> Result<CoercivityEstimate, Error> {
    cfg.validate()?;
    let mut rng = cfg.rng(TAG_COERCIVITY);
    let ball = d.f().ball();
    let f0_center = d.f0().eval(ball.center())?;
    let mut table = Vec::with_capacity(cfg.n_radii);
    for t in radius_levels(ball.radius(), cfg.n_radii) {
        let mut level = f64::INFINITY;
        for _ in 0..cfg.n_sphere {
            let x = sphere_point(&mut rng, ball.center(), t)?;
            let dx = x.sub(ball.center())?;
            let inc = d.f0().eval(&x)?.sub(&f0_center)?;
            level = fp::min(level, probe_pairing(d, &dx, &inc)?);
        }
        table.push((t, level));
    }
    let delta0 = table.last().map(|&(_, v)| v).unwrap_or(0.0);
    Ok(CoercivityEstimate { table, delta0 })
}

/// Cheap single-level coercivity probe used by the solver's radius guard,
/// centered wherever the solve starts.
pub(crate) fn coercivity_at_radius(
    d: &Decomposition,
    center: &Vector,
    radius: f64,
    n_sphere: usize,
    seed: u64,
) -> Result<f64, Error> {
    let cfg = SamplerConfig { n_sphere, n_radii: 1, n_pairs: 2, seed };
    let mut rng = cfg.rng(TAG_COERCIVITY);
    let f0_center = d.f0().eval(center)?;
    let mut level = f64::INFINITY;
    for _ in 0..n_sphere {
        let x = sphere_point(&mut rng, center, radius)?;
        let dx = x.sub(center)?;
        let inc = d.f0().eval(&x)?.sub(&f0_center)?;
        level = fp::min(level, probe_pairing(d, &dx, &inc)?);
    }
    Ok(level)
}

/// Comparison constant: the infimum over interior samples of
/// `<f(x) - f(x0), probe> / <f0(x) - f0(x0), probe>`.
///
/// A nonpositive denominator at any sample is a hard failure carrying the
/// witness point.
pub fn estimate_comparison_k(d: &Decomposition, cfg: &SamplerConfig) -> Result<f64, Error> {
    cfg.validate()?;
    let mut rng = cfg.rng(TAG_COMPARISON);
    let ball = d.f().ball();
    let f_center = d.f().eval(ball.center())?;
    let f0_center = d.f0().eval(ball.center())?;
    let mut k = f64::INFINITY;
    for _ in 0..cfg.n_sphere * cfg.n_radii {
        let x = interior_point(&mut rng, ball.center(), ball.radius())?;
        let dx = x.sub(ball.center())?;
        if dx.norm()? == 0.0 {
            continue;
        }
        let num = probe_pairing(d, &dx, &d.f().eval(&x)?.sub(&f_center)?)?;
        let den = probe_pairing(d, &dx, &d.f0().eval(&x)?.sub(&f0_center)?)?;
        if den <= 0.0 {
            return Err(Error::DegenerateDenominator { witness: x.entries().to_vec() });
        }
        k = fp::min(k, num / den);
    }
    Ok(k)
}

/// Contraction evidence: the binned envelope of mismatch increments over
/// surrogate increments, the fitted `(sigma, m0)` when some iterate of the
/// envelope is a contraction, and the degenerate-pair count.
#[derive(Debug, Clone)]
pub struct ContractionEstimate {
    /// `(tau_b, max df1 over pairs with df0 <= tau_b)`, nondecreasing.
    pub envelope: Vec<(f64, f64)>,
    pub sigma: Option<f64>,
    pub m0: Option<usize>,
    pub degenerate: usize,
    pub pairs: usize,
}

pub fn estimate_contraction(
    d: &Decomposition,
    cfg: &SamplerConfig,
) -> Result<ContractionEstimate, Error> {
    cfg.validate()?;
    let mut rng = cfg.rng(TAG_CONTRACTION);
    let ball = d.f().ball();
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(cfg.n_pairs);
    let mut degenerate = 0usize;
    for _ in 0..cfg.n_pairs {
        let x1 = interior_point(&mut rng, ball.center(), ball.radius())?;
        let x2 = interior_point(&mut rng, ball.center(), ball.radius())?;
        let df = d.f().eval(&x1)?.sub(&d.f().eval(&x2)?)?;
        let df0 = d.f0().eval(&x1)?.sub(&d.f0().eval(&x2)?)?;
        let df0_norm = df0.norm()?;
        if df0_norm == 0.0 {
            degenerate += 1;
            continue;
        }
        let df1_norm = df.sub(&df0)?.norm()?;
        samples.push((df0_norm, df1_norm));
    }
    if samples.is_empty() {
        return Ok(ContractionEstimate {
            envelope: Vec::new(),
            sigma: None,
            m0: None,
            degenerate,
            pairs: cfg.n_pairs,
        });
    }

    let envelope = binned_envelope(&samples, 64);
    let (sigma, m0) = fit_contraction(&envelope);
    Ok(ContractionEstimate { envelope, sigma, m0, degenerate, pairs: cfg.n_pairs })
}

/// Log-spaced upper edges with the per-bin max mismatch, then a cumulative
/// max so the envelope is a nondecreasing function of the increment size.
fn binned_envelope(samples: &[(f64, f64)], bins: usize) -> Vec<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &(df0, _) in samples {
        lo = fp::min(lo, df0);
        hi = fp::max(hi, df0);
    }
    if !(hi > 0.0) {
        return Vec::new();
    }
    if hi / lo < 1.0 + 1e-12 {
        let mut top = 0.0f64;
        for &(_, df1) in samples {
            top = fp::max(top, df1);
        }
        return alloc::vec![(hi, top)];
    }
    let ratio = fp::ln(hi / lo);
    let mut best = alloc::vec![0.0f64; bins];
    for &(df0, df1) in samples {
        let frac = fp::ln(df0 / lo) / ratio;
        let mut b = (frac * bins as f64) as usize;
        if b >= bins {
            b = bins - 1;
        }
        best[b] = fp::max(best[b], df1);
    }
    let mut out = Vec::with_capacity(bins);
    let mut cum = 0.0f64;
    for (b, item) in best.iter().enumerate() {
        cum = fp::max(cum, *item);
        let edge = lo * fp::exp(ratio * ((b + 1) as f64) / (bins as f64));
        out.push((edge, cum));
    }
    out
}

fn envelope_lookup(envelope: &[(f64, f64)], v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    for &(edge, val) in envelope {
        if v <= edge {
            return val;
        }
    }
    envelope.last().map(|&(_, val)| val).unwrap_or(0.0)
}

/// Looks for the smallest iteration count `m <= 16` such that the m-fold
/// iterate of the envelope contracts every bin edge, and reports the worst
/// ratio at that count.
fn fit_contraction(envelope: &[(f64, f64)]) -> (Option<f64>, Option<usize>) {
    if envelope.is_empty() {
        return (None, None);
    }
    for m in 1..=16usize {
        let mut worst = 0.0f64;
        for &(edge, _) in envelope {
            let mut v = edge;
            for _ in 0..m {
                v = envelope_lookup(envelope, v);
            }
            worst = fp::max(worst, v / edge);
        }
        if worst < 1.0 {
            return (Some(worst), Some(m));
        }
    }
    (None, None)
}

/// Lower stability constant of the surrogate between sampled pairs:
/// `inf ||f(x1) - f(x2)|| / ||f0(x1) - f0(x2)||`.
#[derive(Debug, Clone)]
pub struct StabilityEstimate {
    pub k1: f64,
    pub degenerate: usize,
    pub pairs: usize,
}

pub fn estimate_local_stability_k1(
    d: &Decomposition,
    cfg: &SamplerConfig,
) -> Result<StabilityEstimate, Error> {
    cfg.validate()?;
    let mut rng = cfg.rng(TAG_STABILITY);
    let ball = d.f().ball();
    let mut k1 = f64::INFINITY;
    let mut degenerate = 0usize;
    let mut seen = false;
    for _ in 0..cfg.n_pairs {
        let x1 = interior_point(&mut rng, ball.center(), ball.radius())?;
        let x2 = interior_point(&mut rng, ball.center(), ball.radius())?;
        let den = d.f0().eval(&x1)?.sub(&d.f0().eval(&x2)?)?.norm()?;
        if den == 0.0 {
            degenerate += 1;
            continue;
        }
        let num = d.f().eval(&x1)?.sub(&d.f().eval(&x2)?)?.norm()?;
        k1 = fp::min(k1, num / den);
        seen = true;
    }
    if !seen {
        return Err(Error::AllPairsDegenerate);
    }
    Ok(StabilityEstimate { k1, degenerate, pairs: cfg.n_pairs })
}

/// Sampled membership of a target in the solvable set over the ball.
#[derive(Debug, Clone)]
pub enum Membership {
    /// Every boundary sample points inward: `min slack` is the margin.
    Member { margin: f64 },
    /// Some boundary sample points outward; the witness is that point.
    NonMember { witness: Vector, margin: f64 },
    /// Slacks straddle zero within tolerance.
    Inconclusive { margin: f64 },
}

/// Signs of `<f(x) - y, probe(x - x0)>` over the bounding sphere decide
/// membership: all positive means the boundary image surrounds `y`.
pub fn solvable_set_membership(
    d: &Decomposition,
    y: &Vector,
    cfg: &SamplerConfig,
) -> Result<Membership, Error> {
    cfg.validate()?;
    let mut rng = cfg.rng(TAG_MEMBERSHIP);
    let ball = d.f().ball();
    let r0 = ball.radius();
    let mut min_slack = f64::INFINITY;
    let mut max_abs = 0.0f64;
    let mut witness: Option<Vector> = None;
    for _ in 0..cfg.n_sphere * cfg.n_radii {
        let x = sphere_point(&mut rng, ball.center(), r0)?;
        let dx = x.sub(ball.center())?;
        let gap = d.f().eval(&x)?.sub(y)?;
        let slack = probe_pairing(d, &dx, &gap)?;
        if slack < min_slack {
            min_slack = slack;
            witness = Some(x);
        }
        max_abs = fp::max(max_abs, fp::abs(slack));
    }
    let tol = 1e-12 * (1.0 + y.norm()? + max_abs);
    if min_slack > tol {
        Ok(Membership::Member { margin: min_slack })
    } else if min_slack < -tol {
        Ok(Membership::NonMember { witness: witness.expect("witness exists"), margin: min_slack })
    } else {
        Ok(Membership::Inconclusive { margin: min_slack })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Everything the certification pipeline measured, plus the verdict and the
/// standing gaps of the sampled approach.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub mu: Vec<(f64, f64)>,
    pub nu: Vec<(f64, f64)>,
    pub k: f64,
    pub k1: f64,
    pub sigma: Option<f64>,
    pub m0: Option<usize>,
    pub delta0: f64,
    /// Certified target radius `0.99 (1 - sigma) delta0` when contraction
    /// holds: targets within this distance of `f(x0)` are reachable.
    pub r1: Option<f64>,
    pub verdict: Verdict,
    pub gaps: Vec<String>,
    pub seed: u64,
}

/// Runs every estimator and combines them into a verdict.
///
/// PASS needs positive coercivity at the full radius, a positive comparison
/// constant, a positive stability constant, and a contraction fit. Hard
/// negative evidence (nonpositive delta0 or k, no contraction) gives FAIL;
/// unusable evidence (too many degenerate pairs, a degenerate comparison
/// denominator) gives INCONCLUSIVE unless a hard negative is also present.
pub fn run_certification(
    d: &Decomposition,
    cfg: &SamplerConfig,
) -> Result<CertificateReport, Error> {
    cfg.validate()?;
    let mut gaps: Vec<String> = Vec::new();
    gaps.push(String::from(
        "openness of the surrogate on the ball is assumed, not finitely checkable",
    ));
    gaps.push(format!(
        "all bounds are sampled evidence ({} sphere points x {} radii, {} pairs, seed {}), not proofs on the continuum",
        cfg.n_sphere, cfg.n_radii, cfg.n_pairs, cfg.seed
    ));
    gaps.push(String::from(
        "pointwise duality inequalities are checked on sampled directions only",
    ));

    let mu = estimate_growth_mu(d, cfg)?;
    let nu = estimate_coercivity_nu(d, cfg)?;
    let contraction = estimate_contraction(d, cfg)?;

    let mut inconclusive = false;
    let mut hard_fail = false;

    let k = match estimate_comparison_k(d, cfg) {
        Ok(k) => k,
        Err(Error::DegenerateDenominator { witness }) => {
            gaps.push(format!(
                "comparison denominator vanished at a sampled point (first coordinate {:.3e}); k recorded as 0",
                witness.first().copied().unwrap_or(0.0)
            ));
            hard_fail = true;
            0.0
        }
        Err(e) => return Err(e),
    };

    let k1 = match estimate_local_stability_k1(d, cfg) {
        Ok(est) => {
            if est.degenerate * 10 > est.pairs {
                gaps.push(format!(
                    "{} of {} stability pairs were degenerate; evidence is too thin",
                    est.degenerate, est.pairs
                ));
                inconclusive = true;
            }
            est.k1
        }
        Err(Error::AllPairsDegenerate) => {
            gaps.push(String::from(
                "every stability pair was degenerate; the surrogate looks constant on the ball",
            ));
            inconclusive = true;
            0.0
        }
        Err(e) => return Err(e),
    };

    if contraction.degenerate * 10 > contraction.pairs {
        gaps.push(format!(
            "{} of {} contraction pairs were degenerate; evidence is too thin",
            contraction.degenerate, contraction.pairs
        ));
        inconclusive = true;
    }

    let delta0 = nu.delta0;
    if delta0 <= 0.0 {
        hard_fail = true;
    }
    if k <= 0.0 {
        hard_fail = true;
    }
    if k1 <= 0.0 && !inconclusive {
        hard_fail = true;
    }
    if contraction.sigma.is_none() && contraction.degenerate * 10 <= contraction.pairs {
        hard_fail = true;
    }

    let r1 = contraction.sigma.map(|s| 0.99 * (1.0 - s) * fp::max(delta0, 0.0));
    let verdict = if hard_fail {
        Verdict::Fail
    } else if inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };

    Ok(CertificateReport {
        mu,
        nu: nu.table,
        k,
        k1,
        sigma: contraction.sigma,
        m0: contraction.m0,
        delta0,
        r1,
        verdict,
        gaps,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Ball, MappingHandle, SurrogateHandle};
    use crate::spaces::SpaceDescriptor;
    use alloc::vec;

    fn euclid(dim: usize) -> SpaceDescriptor {
        SpaceDescriptor::euclidean(dim)
    }

    fn sin_perturbed(dim: usize, radius: f64) -> Decomposition {
        let ball = Ball::new(Vector::zeros(euclid(dim)), radius).unwrap();
        let f = MappingHandle::from_pointwise(euclid(dim), ball, |t| t + 0.25 * t.sin()).unwrap();
        Decomposition::new(f, SurrogateHandle::identity(euclid(dim))).unwrap()
    }

    fn negated(dim: usize, radius: f64) -> Decomposition {
        let ball = Ball::new(Vector::zeros(euclid(dim)), radius).unwrap();
        let f = MappingHandle::from_pointwise(euclid(dim), ball, |t| -t).unwrap();
        Decomposition::new(f, SurrogateHandle::identity(euclid(dim))).unwrap()
    }

    fn small_cfg() -> SamplerConfig {
        SamplerConfig { n_sphere: 16, n_radii: 8, n_pairs: 512, seed: 7 }
    }

    #[test]
    fn identity_coercivity_is_the_radius() {
        let d = sin_perturbed(3, 2.0);
        let nu = estimate_coercivity_nu(&d, &small_cfg()).unwrap();
        // f0 = identity pairs each sphere point against itself.
        assert!((nu.delta0 - 2.0).abs() < 1e-12);
        for &(t, v) in &nu.table {
            assert!((v - t).abs() < 1e-12 * (1.0 + t));
        }
    }

    #[test]
    fn growth_table_is_monotone_and_bounded() {
        let d = sin_perturbed(3, 2.0);
        let mu = estimate_growth_mu(&d, &small_cfg()).unwrap();
        let mut prev = 0.0;
        for &(t, v) in &mu {
            assert!(v >= prev);
            // |t + 0.25 sin t| <= 1.25 t componentwise.
            assert!(v <= 1.25 * t + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn sin_perturbation_contracts_with_sigma_near_quarter() {
        let d = sin_perturbed(4, 4.0);
        let est = estimate_contraction(&d, &small_cfg()).unwrap();
        let sigma = est.sigma.expect("contractive");
        assert!(sigma < 0.26, "sigma {sigma}");
        assert_eq!(est.m0, Some(1));
        assert_eq!(est.degenerate, 0);
        // Envelope is a nondecreasing step function through the origin.
        let mut prev = 0.0;
        for &(edge, v) in &est.envelope {
            assert!(edge > 0.0 && v >= prev);
            prev = v;
        }
    }

    #[test]
    fn negation_is_not_contractive_and_fails() {
        let d = negated(2, 4.0);
        let est = estimate_contraction(&d, &small_cfg()).unwrap();
        assert!(est.sigma.is_none());
        let report = run_certification(&d, &small_cfg()).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        // Comparison ratio is exactly -1 for f = -x against the identity.
        assert!(report.k <= -1.0 + 1e-9);
    }

    #[test]
    fn certification_passes_the_sin_fixture() {
        let d = sin_perturbed(3, 4.0);
        let report = run_certification(&d, &small_cfg()).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.delta0 > 3.99);
        assert!(report.k > 0.7 && report.k < 1.3);
        assert!(report.k1 > 0.7);
        let r1 = report.r1.unwrap();
        let sigma = report.sigma.unwrap();
        assert!(r1 < (1.0 - sigma) * report.delta0);
        assert!(report.gaps.len() >= 3);
        assert_eq!(report.seed, 7);
    }

    #[test]
    fn reports_are_reproducible() {
        let d = sin_perturbed(3, 4.0);
        let a = run_certification(&d, &small_cfg()).unwrap();
        let b = run_certification(&d, &small_cfg()).unwrap();
        assert_eq!(a.k, b.k);
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.mu, b.mu);
        assert_eq!(a.nu, b.nu);
    }

    #[test]
    fn membership_splits_reachable_from_unreachable() {
        let d = sin_perturbed(2, 1.0);
        let y_in = Vector::new(euclid(2), vec![0.3, 0.0]).unwrap();
        match solvable_set_membership(&d, &y_in, &small_cfg()).unwrap() {
            Membership::Member { margin } => assert!(margin > 0.1),
            other => panic!("expected member, got {other:?}"),
        }
        // Far outside the growth envelope of the unit ball.
        let y_out = Vector::new(euclid(2), vec![5.0, 0.0]).unwrap();
        match solvable_set_membership(&d, &y_out, &small_cfg()).unwrap() {
            Membership::NonMember { margin, .. } => assert!(margin < 0.0),
            other => panic!("expected non-member, got {other:?}"),
        }
    }

    #[test]
    fn comparison_k_close_to_one_for_small_perturbation() {
        let d = sin_perturbed(3, 4.0);
        let k = estimate_comparison_k(&d, &small_cfg()).unwrap();
        // <x + 0.25 sin x, x> / <x, x> lies in [0.75, 1.25].
        assert!(k >= 0.75 - 1e-12 && k <= 1.25 + 1e-12);
    }
}
