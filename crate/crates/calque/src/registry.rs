//! Named example operators, addressable from the command line and reused by
//! the test suite. Every entry fixes its own defaults; a [`FixtureSpec`]
//! overrides single knobs without restating the rest.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::fp;
use crate::grid::Grid;
use crate::linalg::DenseMatrix;
use crate::operators::{Ball, Decomposition, MappingHandle, SurrogateHandle};
use crate::pde::elliptic::{build_elliptic, EllipticProblem, EnvelopeSpec};
use crate::pde::ns::{build_ns, NsConfig, NsProblem};
use crate::spaces::{ScalarFunction, SpaceDescriptor, Vector};
use crate::Error;

/// Optional overrides; `None` fields take the entry's own default.
#[derive(Debug, Clone, Default)]
pub struct FixtureSpec {
    pub dim: Option<usize>,
    pub radius: Option<f64>,
    /// Diagonal scale of the `linear` entry.
    pub scale: Option<f64>,
    /// When set on `linear`, keep the identity surrogate instead of the
    /// exact one, so the scale mismatch lands in the perturbation part.
    pub identity_surrogate: Option<bool>,
    /// Perturbation size: the sine amplitude of `sin-perturbed`, the
    /// coupling strength of `diag-monotone`.
    pub amplitude: Option<f64>,
    /// Interior points per axis for the elliptic entries.
    pub grid_n: Option<usize>,
    /// Constant envelope bounds of the elliptic entries. Setting the upper
    /// one below the coefficient's actual range makes construction fail,
    /// which is exactly what the negative-control path wants.
    pub envelope_b: Option<f64>,
    pub envelope_c: Option<f64>,
    pub modes: Option<usize>,
    pub nu: Option<f64>,
}

/// A built problem: either a bare decomposition or a PDE problem that
/// carries one plus its own norms and helpers.
pub enum Fixture {
    Plain(Decomposition),
    Elliptic(EllipticProblem),
    Ns(NsProblem),
}

impl Fixture {
    pub fn decomposition(&self) -> &Decomposition {
        match self {
            Fixture::Plain(d) => d,
            Fixture::Elliptic(p) => p.decomposition(),
            Fixture::Ns(p) => p.decomposition(),
        }
    }

    pub fn as_elliptic(&self) -> Option<&EllipticProblem> {
        match self {
            Fixture::Elliptic(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_ns(&self) -> Option<&NsProblem> {
        match self {
            Fixture::Ns(p) => Some(p),
            _ => None,
        }
    }

    /// The natural start point: the center of the working ball.
    pub fn start(&self) -> Vector {
        self.decomposition().f().ball().center().clone()
    }
}

pub const NAMES: &[&str] = &[
    "linear",
    "sin-perturbed",
    "diag-monotone",
    "elliptic-1d",
    "elliptic-2d",
    "ns-steady-2d",
];

pub fn build(name: &str, spec: &FixtureSpec) -> Result<Fixture, Error> {
    match name {
        "linear" => {
            let dim = spec.dim.unwrap_or(1);
            let radius = spec.radius.unwrap_or(10.0);
            let scale = spec.scale.unwrap_or(1.0);
            let space = SpaceDescriptor::lp(dim, 2.0)?;
            let ball = Ball::new(Vector::zeros(space.clone()), radius)?;
            let f = MappingHandle::from_pointwise(space.clone(), ball, move |t| scale * t)?;
            let f0 = if spec.identity_surrogate.unwrap_or(true) {
                SurrogateHandle::identity(space)
            } else {
                SurrogateHandle::linear(
                    space.clone(),
                    space.clone(),
                    DenseMatrix::scaled_identity(dim, scale),
                )?
            };
            Ok(Fixture::Plain(Decomposition::new(f, f0)?))
        }
        "sin-perturbed" => {
            let dim = spec.dim.unwrap_or(1);
            let radius = spec.radius.unwrap_or(10.0);
            let amp = spec.amplitude.unwrap_or(0.25);
            if !(fp::abs(amp) < 1.0) {
                return Err(Error::InvalidParameter {
                    what: "sine amplitude must stay below 1",
                });
            }
            let space = SpaceDescriptor::lp(dim, 2.0)?;
            let ball = Ball::new(Vector::zeros(space.clone()), radius)?;
            let f =
                MappingHandle::from_pointwise(space.clone(), ball, move |t| t + amp * fp::sin(t))?;
            let f0 = SurrogateHandle::identity(space);
            Ok(Fixture::Plain(Decomposition::new(f, f0)?))
        }
        "diag-monotone" => {
            let dim = spec.dim.unwrap_or(4);
            let radius = spec.radius.unwrap_or(8.0);
            let amp = spec.amplitude.unwrap_or(0.1);
            let phi = ScalarFunction::from_fn(|t| 1.0 + 1.0 / (1.0 + t * t), true);
            let space = SpaceDescriptor::lp(dim, 2.0)?;
            let ball = Ball::new(Vector::zeros(space.clone()), radius)?;
            let phi_f = phi.clone();
            let space_cl = space.clone();
            let f = MappingHandle::new(
                space.clone(),
                space.clone(),
                ball,
                Arc::new(move |x: &Vector| {
                    let e = x.entries();
                    let out: Vec<f64> = (0..e.len())
                        .map(|i| {
                            let t = e[i];
                            phi_f.eval(t) * t + amp * fp::sin(e[(i + 1) % e.len()])
                        })
                        .collect();
                    Vector::new(space_cl.clone(), out)
                }),
            )?;
            let f0 = SurrogateHandle::diagonal_monotone(space, phi)?;
            Ok(Fixture::Plain(Decomposition::new(f, f0)?))
        }
        "elliptic-1d" | "elliptic-2d" => {
            let n = spec.grid_n.unwrap_or(if name == "elliptic-1d" { 65 } else { 9 });
            let grid = if name == "elliptic-1d" { Grid::line(n)? } else { Grid::square(n)? };
            let radius = spec.radius.unwrap_or(10.0);
            // a between the constant envelopes 1 and 2, approaching each at
            // the extremes of the gradient range.
            let a = Arc::new(|_axis: usize, _mid: [f64; 2], _xi: f64, eta: f64| {
                1.0 + 1.0 / (1.0 + eta * eta)
            });
            let envelope = EnvelopeSpec::constant(
                spec.envelope_b.unwrap_or(2.0),
                spec.envelope_c.unwrap_or(1.0),
            );
            build_elliptic(grid, 2.0, a, envelope, radius).map(Fixture::Elliptic)
        }
        "ns-steady-2d" => {
            let cfg = NsConfig {
                modes: spec.modes.unwrap_or(8),
                nu: spec.nu.unwrap_or(0.1),
                radius: spec.radius.unwrap_or(8.0),
                ..NsConfig::default()
            };
            build_ns(&cfg).map(Fixture::Ns)
        }
        _ => Err(Error::InvalidParameter { what: "unknown operator name" }),
    }
}

/// Bare perturbation mappings for the fixed-point driver, which takes `f1`
/// directly instead of a decomposition.
pub fn build_f1(name: &str, spec: &FixtureSpec) -> Result<MappingHandle, Error> {
    match name {
        "cos-contraction" => {
            let dim = spec.dim.unwrap_or(1);
            let radius = spec.radius.unwrap_or(4.0);
            let amp = spec.amplitude.unwrap_or(0.5);
            let space = SpaceDescriptor::lp(dim, 2.0)?;
            let ball = Ball::new(Vector::zeros(space.clone()), radius)?;
            MappingHandle::from_pointwise(space, ball, move |t| amp * fp::cos(t))
        }
        _ => Err(Error::InvalidParameter { what: "unknown operator name" }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{run_certification, SamplerConfig, Verdict};
    use crate::solve::{solve_comparison, solve_fixed_point, Outcome, SolveConfig};

    fn sampler(seed: u64) -> SamplerConfig {
        SamplerConfig { n_sphere: 16, n_radii: 6, n_pairs: 512, seed }
    }

    #[test]
    fn every_named_entry_builds() {
        for name in NAMES {
            build(name, &FixtureSpec::default()).unwrap();
        }
        assert!(build("no-such", &FixtureSpec::default()).is_err());
    }

    #[test]
    fn identity_entry_certifies_cleanly() {
        let fixture = build("linear", &FixtureSpec::default()).unwrap();
        let report = run_certification(fixture.decomposition(), &sampler(5)).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!((report.k - 1.0).abs() < 1e-9);
        for (t, v) in &report.nu {
            assert!((t - v).abs() <= 1e-9 * (1.0 + t));
        }
    }

    #[test]
    fn negated_scale_fails_certification() {
        let spec = FixtureSpec { scale: Some(-1.0), ..FixtureSpec::default() };
        let fixture = build("linear", &spec).unwrap();
        let report = run_certification(fixture.decomposition(), &sampler(5)).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
    }

    #[test]
    fn diag_monotone_certifies_and_solves() {
        let fixture = build("diag-monotone", &FixtureSpec::default()).unwrap();
        let report = run_certification(fixture.decomposition(), &sampler(13)).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        let sigma = report.sigma.unwrap();
        assert!(sigma < 0.3, "sigma {sigma}");

        let d = fixture.decomposition();
        let space = d.f().domain().clone();
        let y = Vector::new(space, vec![0.9, -0.4, 0.2, 0.6]).unwrap();
        let trace =
            solve_comparison(d, &y, &fixture.start(), &SolveConfig::default()).unwrap();
        let (x, _) = trace.outcome.converged().expect("converged");
        let back = d.f().eval(x).unwrap();
        assert!(back.sub(&y).unwrap().norm().unwrap() <= 1e-9);
    }

    #[test]
    fn cos_contraction_reaches_the_known_point() {
        let f1 = build_f1("cos-contraction", &FixtureSpec::default()).unwrap();
        let y = Vector::zeros(f1.domain().clone());
        let start = Vector::zeros(f1.domain().clone());
        let trace = solve_fixed_point(&f1, &y, &start, &SolveConfig::default()).unwrap();
        match &trace.outcome {
            Outcome::Converged { x, .. } => {
                assert!((x.entries()[0] - 0.450_183_611_294_873_6).abs() < 1e-8);
            }
            other => panic!("unexpected outcome {}", other.label()),
        }
    }

    #[test]
    fn elliptic_entries_certify() {
        for name in ["elliptic-1d", "elliptic-2d"] {
            let spec = FixtureSpec {
                grid_n: Some(if name == "elliptic-1d" { 17 } else { 5 }),
                ..FixtureSpec::default()
            };
            let fixture = build(name, &spec).unwrap();
            let report = run_certification(fixture.decomposition(), &sampler(3)).unwrap();
            assert_eq!(report.verdict, Verdict::Pass, "{name}: {:?}", report.gaps);
        }
    }
}
