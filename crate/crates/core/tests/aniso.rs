use approx::assert_relative_eq;
use ovals_core::aniso_flow::{
    huisken_density, normalize_run, ratio_map, run_aniso, solve_for_ratio, sphere_entropy, width_ratio, AnisoConfig,
    AnisoTrajectory, EllipsoidParams, RadialSurface, RatioSearch, StopRule, DELTA_CLAMP,
};
use ovals_core::radial_flow::{needs_remesh, remesh, step_flow, QuotientCurve, RemeshPolicy, StepPolicy};
use ovals_core::{Error, SymmetryClass};
use proptest::prelude::*;

fn sym() -> SymmetryClass {
    SymmetryClass::new(3, 2).unwrap()
}

fn flow(s: &RadialSurface, stop: StopRule) -> AnisoTrajectory {
    run_aniso(s, &AnisoConfig { stop, ..Default::default() }).unwrap()
}

#[test]
fn sphere_extinction_and_constant_density() {
    let s = RadialSurface::sphere(6f64.sqrt(), sym(), 32).unwrap();
    let t = flow(&s, StopRule::AreaRatio(1e-2));
    let t_ext = t.t_ext.unwrap();
    assert!((t_ext - 1.0).abs() < 5e-3, "{t_ext}");
    let sigma = sphere_entropy(3).unwrap();
    for snap in &t.snapshots {
        let d = huisken_density(snap, t_ext).unwrap();
        assert!((d / sigma - 1.0).abs() < 5e-3, "t = {}: {d}", snap.t());
    }
}

#[test]
fn sphere_cannot_be_normalized() {
    // the sphere density sits below the normalization level from the start
    let s = RadialSurface::sphere(6f64.sqrt(), sym(), 32).unwrap();
    let t = flow(&s, StopRule::AreaRatio(1e-2));
    assert!(matches!(normalize_run(&t), Err(Error::OutOfRange { .. })));
}

#[test]
fn equal_weights_keep_the_diagonal_symmetry() {
    let p = EllipsoidParams::new(2.0, 0.5).unwrap();
    let s = RadialSurface::ellipsoid(&p, sym(), 32).unwrap();
    let t = flow(&s, StopRule::Time(0.3));
    assert_relative_eq!(t.last().t(), 0.3, epsilon = 1e-12);
    for snap in &t.snapshots {
        assert!(snap.diagonal_defect() <= 1e-12, "t = {}", snap.t());
    }
}

/// Radial solution stepped to time `t` with periodic remeshing.
fn radial_at(c0: &QuotientCurve, t: f64) -> QuotientCurve {
    let policy = StepPolicy::default();
    let remesh_policy = RemeshPolicy { fraction: 0.08, ..Default::default() };
    let mut c = c0.clone();
    let mut i = 0;
    while c.t() < t {
        c = step_flow(&c, &policy).unwrap().0;
        i += 1;
        if i % 20 == 0 && needs_remesh(&c, &remesh_policy) {
            c = remesh(&c, &remesh_policy).unwrap();
        }
    }
    c
}

#[test]
fn equal_weights_match_the_radial_solver() {
    let ell = 2.0;
    let p = EllipsoidParams::new(ell, 0.5).unwrap();
    let s = RadialSurface::ellipsoid(&p, sym(), 32).unwrap();
    let c0 = QuotientCurve::ellipsoid_adapted(ell, sym(), 192, 0.08).unwrap();
    assert_relative_eq!(s.extents()[0], c0.tip(), max_relative = 1e-3);
    for t in [0.2, 0.4, 0.6] {
        let a = flow(&s, StopRule::Time(t)).last().extents();
        let r = radial_at(&c0, t);
        assert_relative_eq!(a[0], r.tip(), max_relative = 1e-2);
        assert_relative_eq!(a[1], r.tip(), max_relative = 1e-2);
        assert_relative_eq!(a[2], r.neck(), max_relative = 1e-2);
    }
}

#[test]
fn density_is_monotone_and_ratio_map_is_antisymmetric() {
    let search = RatioSearch::new(2.0, sym(), 32);
    let lo = ratio_map(0.3, &search).unwrap();
    let hi = ratio_map(0.7, &search).unwrap();
    assert_relative_eq!(lo.mu[0] + hi.mu[0], 1.0, epsilon = 1e-9);
    assert_relative_eq!(lo.t_ext, hi.t_ext, max_relative = 1e-12);
    assert!(lo.mu[0] < 0.5);

    let p = EllipsoidParams::new(2.0, 0.3).unwrap();
    let t = flow(&RadialSurface::ellipsoid(&p, sym(), 32).unwrap(), StopRule::AreaRatio(1e-3));
    let t_ext = t.t_ext.unwrap();
    let d: Vec<f64> = t.snapshots.iter().filter(|s| s.t() < t_ext).map(|s| huisken_density(s, t_ext).unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-3));
    assert!(!t.convexity_lost);
}

#[test]
fn half_target_needs_no_flow() {
    let search = RatioSearch::new(2.0, sym(), 32);
    for target in [0.5, 0.495, 0.505] {
        let sol = solve_for_ratio(target, &search).unwrap();
        assert_eq!(sol.a1, 0.5);
        assert!(sol.evaluations.is_empty());
    }
    assert!(solve_for_ratio(1.0, &search).is_err());
    assert!(solve_for_ratio(0.0, &search).is_err());
}

#[test]
fn width_ratio_examples() {
    assert_eq!(width_ratio([1.0, 1.0]).unwrap(), [0.5, 0.5]);
    let mu = width_ratio([1.0, 3.0]).unwrap();
    assert_relative_eq!(mu[0], 0.75, epsilon = 1e-15);
    assert!(width_ratio([0.0, 1.0]).is_err());
}

#[test]
fn only_two_long_axes_are_supported() {
    let s = SymmetryClass::new(4, 3).unwrap();
    assert!(RadialSurface::sphere(1.0, s, 32).is_err());
    assert!(RadialSurface::sphere(1.0, sym(), 16).is_err());
}

proptest! {
    #[test]
    fn width_ratio_is_a_normalized_reciprocal(w1 in 0.01f64..100.0, w2 in 0.01f64..100.0) {
        let mu = width_ratio([w1, w2]).unwrap();
        prop_assert!((mu[0] + mu[1] - 1.0).abs() < 1e-15);
        prop_assert!((mu[0] * w1 - mu[1] * w2).abs() < 1e-12 * (w1 + w2));
        let swapped = width_ratio([w2, w1]).unwrap();
        prop_assert!((swapped[0] - mu[1]).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_parameters_clamp_into_the_simplex(ell in 0.5f64..20.0, a1 in -0.5f64..1.5) {
        let p = EllipsoidParams::new(ell, a1).unwrap();
        prop_assert!(p.a1 >= DELTA_CLAMP && p.a1 <= 1.0 - DELTA_CLAMP);
        prop_assert_eq!(p.clamped, p.a1 != a1);
        let ax = p.semi_axes(sym());
        prop_assert!((ax[0] * p.a1 - ax[1] * p.a2()).abs() < 1e-12 * ax[0]);
        prop_assert!((ax[2] - 2f64.sqrt()).abs() < 1e-15);
    }
}
