//! Randomized invariant checks: the identities every module promises,
//! exercised over generated inputs rather than hand-picked ones.

use std::sync::Arc;

use calque::certify::{run_certification, SamplerConfig, Verdict};
use calque::linalg::DenseMatrix;
use calque::operators::{Ball, MappingHandle, SurrogateHandle};
use calque::registry::{build, FixtureSpec};
use calque::solve::{solve_comparison, SolveConfig};
use calque::spaces::{pair, ScalarFunction, SpaceDescriptor, Vector};
use proptest::prelude::*;

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0), Just(4.0)]
}

fn entries(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn duality_map_identities(p in exponent(), e in (1usize..12).prop_flat_map(entries)) {
        let space = SpaceDescriptor::lp(e.len(), p).unwrap();
        let x = Vector::new(space, e).unwrap();
        let n = x.norm().unwrap();
        let j = x.duality_map().unwrap();
        let pairing = pair(&j, &x).unwrap();
        prop_assert!((pairing - n * n).abs() <= 1e-12 * (1.0 + n * n));
        let jn = j.dual_norm().unwrap();
        prop_assert!((jn - n).abs() <= 1e-12 * (1.0 + n));
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(
        p in exponent(),
        e in (1usize..10).prop_flat_map(|d| (entries(d), entries(d))),
        alpha in -20.0f64..20.0,
    ) {
        let (a, b) = e;
        let space = SpaceDescriptor::lp(a.len(), p).unwrap();
        let x = Vector::new(space.clone(), a).unwrap();
        let y = Vector::new(space, b).unwrap();
        let nx = x.norm().unwrap();
        let scaled = x.scaled(alpha).norm().unwrap();
        prop_assert!((scaled - alpha.abs() * nx).abs() <= 1e-10 * (1.0 + scaled));
        let sum = x.add(&y).unwrap().norm().unwrap();
        prop_assert!(sum <= nx + y.norm().unwrap() + 1e-10 * (1.0 + sum));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_surrogate_round_trips(
        dim in 1usize..8,
        seed_entries in prop::collection::vec(-1.0f64..1.0, 64),
        x_entries in prop::collection::vec(-10.0f64..10.0, 8),
    ) {
        // Diagonally dominant, hence invertible and well-conditioned.
        let m = DenseMatrix::from_fn(dim, |i, j| {
            let off = seed_entries[(i * 8 + j) % seed_entries.len()] * 0.2;
            if i == j { 3.0 + off } else { off }
        });
        let space = SpaceDescriptor::lp(dim, 2.0).unwrap();
        let s = SurrogateHandle::linear(space.clone(), space.clone(), m).unwrap();
        let x = Vector::new(space.clone(), x_entries[..dim].to_vec()).unwrap();
        let z = s.eval(&x).unwrap();
        let back = s.solve(&z, &Vector::zeros(space)).unwrap();
        let err = back.sub(&x).unwrap().norm().unwrap();
        prop_assert!(err <= 1e-10 * (1.0 + x.norm().unwrap()));
    }

    #[test]
    fn diagonal_surrogate_round_trips(x_entries in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let phi = ScalarFunction::from_fn(|t| 1.0 + 1.0 / (1.0 + t * t), true);
        let space = SpaceDescriptor::lp(x_entries.len(), 2.0).unwrap();
        let s = SurrogateHandle::diagonal_monotone(space.clone(), phi).unwrap();
        let x = Vector::new(space.clone(), x_entries).unwrap();
        let z = s.eval(&x).unwrap();
        let back = s.solve(&z, &Vector::zeros(space)).unwrap();
        let err = back.sub(&x).unwrap().norm().unwrap();
        prop_assert!(err <= 1e-10 * (1.0 + x.norm().unwrap()));
    }

    #[test]
    fn frozen_surrogate_is_first_order_accurate(
        amp in 0.05f64..0.9,
        base in prop::collection::vec(-2.0f64..2.0, 1..6),
        dir in prop::collection::vec(-1.0f64..1.0, 6),
        scale in 0.01f64..0.5,
    ) {
        let dim = base.len();
        let space = SpaceDescriptor::lp(dim, 2.0).unwrap();
        let ball = Ball::new(Vector::zeros(space.clone()), 20.0).unwrap();
        let f = MappingHandle::from_pointwise(space.clone(), ball, move |t| t + amp * t.sin())
            .unwrap();
        let x0 = Vector::new(space.clone(), base).unwrap();
        let s = SurrogateHandle::frozen_jacobian(&f, &x0, None).unwrap();

        let d = Vector::new(space, dir[..dim].to_vec()).unwrap();
        let dn = d.norm().unwrap();
        prop_assume!(dn > 1e-6);
        let delta = d.scaled(scale / dn);
        let x = x0.add(&delta).unwrap();
        let gap = f.eval(&x).unwrap().sub(&s.eval(&x).unwrap()).unwrap().norm().unwrap();
        // Curvature of the sine part plus finite-difference slope error.
        let bound = 0.5 * amp * scale * scale * (1.0 + 1e-6) + 1e-7 * scale + 1e-12;
        prop_assert!(gap <= bound, "gap {gap} bound {bound}");
    }

    #[test]
    fn blend_stays_between_its_envelopes(
        diag in prop::collection::vec((0.5f64..4.0, 0.0f64..2.0), 1..6),
        lambda in 0.0f64..1.0,
        x_entries in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let dim = diag.len();
        let space = SpaceDescriptor::lp(dim, 2.0).unwrap();
        let ball = Ball::new(Vector::zeros(space.clone()), 100.0).unwrap();
        // a_i = low + gap >= low = b_i entrywise.
        let hi: Vec<f64> = diag.iter().map(|(lo, gap)| lo + gap).collect();
        let lo: Vec<f64> = diag.iter().map(|(lo, _)| *lo).collect();
        let space_hi = space.clone();
        let hi_cl = hi.clone();
        let upper = MappingHandle::new(
            space.clone(),
            space.clone(),
            ball.clone(),
            Arc::new(move |x: &Vector| {
                let e: Vec<f64> =
                    x.entries().iter().zip(&hi_cl).map(|(v, a)| a * v).collect();
                Vector::new(space_hi.clone(), e)
            }),
        )
        .unwrap();
        let space_lo = space.clone();
        let lo_cl = lo.clone();
        let lower = MappingHandle::new(
            space.clone(),
            space.clone(),
            ball,
            Arc::new(move |x: &Vector| {
                let e: Vec<f64> =
                    x.entries().iter().zip(&lo_cl).map(|(v, b)| b * v).collect();
                Vector::new(space_lo.clone(), e)
            }),
        )
        .unwrap();
        let blend =
            SurrogateHandle::monotone_blend(upper.clone(), lower.clone(), lambda, 1.0 - lambda)
                .unwrap();

        let x = Vector::new(space, x_entries[..dim].to_vec()).unwrap();
        let j = x.duality_map().unwrap();
        let top = pair(&j, &upper.eval(&x).unwrap()).unwrap();
        let mid = pair(&j, &blend.eval(&x).unwrap()).unwrap();
        let bot = pair(&j, &lower.eval(&x).unwrap()).unwrap();
        let tol = 1e-10 * (1.0 + top.abs() + bot.abs());
        prop_assert!(top + tol >= mid && mid >= bot - tol, "{top} {mid} {bot}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn comparison_solves_keep_their_books(
        dim in 1usize..5,
        amp in 0.05f64..0.45,
        target in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let spec = FixtureSpec {
            dim: Some(dim),
            amplitude: Some(amp),
            ..FixtureSpec::default()
        };
        let fixture = build("sin-perturbed", &spec).unwrap();
        let d = fixture.decomposition();

        let space = d.f().domain().clone();
        let raw = Vector::new(space, target[..dim].to_vec()).unwrap();
        let n = raw.norm().unwrap();
        prop_assume!(n > 1e-9);
        // Stay well inside the certified reach so the guard never trips.
        let y = raw.scaled(0.5 * (1.0 - amp) * 10.0 / n);

        let trace = solve_comparison(d, &y, &fixture.start(), &SolveConfig::default()).unwrap();
        let yhat = y.norm().unwrap();
        prop_assert!(trace.outcome.converged().is_some(), "{}", trace.outcome.label());
        prop_assert!(trace.telescoping_defect <= 1e-10 * (1.0 + yhat));

        // Geometric decay at the perturbation's own Lipschitz rate.
        for w in trace.records.windows(2) {
            prop_assert!(
                w[1].res_norm <= amp * w[0].res_norm * (1.0 + 1e-9) + 1e-15,
                "rate broke: {} then {}",
                w[0].res_norm,
                w[1].res_norm
            );
        }
    }

    #[test]
    fn certificates_keep_their_invariants(
        dim in 1usize..4,
        amp in 0.05f64..0.4,
        seed in 0u64..1000,
    ) {
        let spec = FixtureSpec {
            dim: Some(dim),
            amplitude: Some(amp),
            ..FixtureSpec::default()
        };
        let fixture = build("sin-perturbed", &spec).unwrap();
        let cfg = SamplerConfig { n_sphere: 8, n_radii: 4, n_pairs: 128, seed };
        let report = run_certification(fixture.decomposition(), &cfg).unwrap();

        for w in report.mu.windows(2) {
            prop_assert!(w[1].1 >= w[0].1);
        }
        prop_assert!(report.delta0 > 0.0);
        prop_assert_eq!(report.verdict, Verdict::Pass);
        let sigma = report.sigma.unwrap();
        let r1 = report.r1.unwrap();
        prop_assert!(sigma < 1.0);
        prop_assert!(r1 > 0.0 && r1 < (1.0 - sigma) * report.delta0);
    }
}
