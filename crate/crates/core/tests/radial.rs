use std::f64::consts::PI;

use approx::assert_relative_eq;
use ovals_core::radial_flow::{
    ellipse_axes, renormalize_trajectory, run_to_extinction, ChartOptions, QuotientCurve, RunConfig, TauCalibration,
};
use ovals_core::SymmetryClass;
use proptest::prelude::*;

fn sphere_run(n: usize, k: usize, m: usize) -> (SymmetryClass, ovals_core::radial_flow::Trajectory) {
    let sym = SymmetryClass::new(n, k).unwrap();
    let c = QuotientCurve::quarter_circle((2.0 * n as f64).sqrt(), sym, m).unwrap();
    (sym, run_to_extinction(&c, &RunConfig::default()).unwrap())
}

#[test]
fn sphere_extinction_in_several_dimensions() {
    // R^2 / (2n) with R^2 = 2n
    for (n, k) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
        let (_, t) = sphere_run(n, k, 96);
        assert!((t.t_ext - 1.0).abs() < 1e-3, "n={n} k={k}: {}", t.t_ext);
        assert!(!t.convexity_lost);
    }
}

#[test]
fn sphere_area_shrinks_linearly() {
    let (sym, t) = sphere_run(3, 2, 128);
    for (c, a) in t.snapshots.iter().zip(&t.areas) {
        let r2 = 2.0 * sym.n() as f64 * (1.0 - c.t());
        assert_relative_eq!(*a, PI * r2 / 4.0, max_relative = 2e-3);
        assert_relative_eq!(c.roundness(), 1.0, epsilon = 1e-3);
    }
}

#[test]
fn renormalized_sphere_is_static() {
    let (sym, t) = sphere_run(3, 2, 128);
    let rr = renormalize_trajectory(&t, TauCalibration::Literal, &ChartOptions::default()).unwrap();
    let r = (2.0 * sym.n() as f64).sqrt();
    assert!(rr.samples.len() > 10);
    for p in &rr.samples {
        assert_relative_eq!(p.tip(), r, max_relative = 2e-3);
        assert_relative_eq!(p.neck(), r, max_relative = 2e-3);
    }
}

#[test]
fn ellipsoid_run_shrinks_monotonically() {
    let sym = SymmetryClass::new(3, 2).unwrap();
    let c = QuotientCurve::ellipsoid_adapted(2.0, sym, 128, 0.08).unwrap();
    let t = run_to_extinction(&c, &RunConfig::default()).unwrap();
    assert!(!t.convexity_lost);
    assert!(t.areas.windows(2).all(|w| w[1] < w[0]));
    let tips: Vec<f64> = t.snapshots.iter().map(|c| c.tip()).collect();
    let necks: Vec<f64> = t.snapshots.iter().map(|c| c.neck()).collect();
    assert!(tips.windows(2).all(|w| w[1] < w[0]));
    assert!(necks.windows(2).all(|w| w[1] < w[0]));
    // the long axis shrinks relatively slower, so the oval ends round
    assert!(t.roundness < tips[0] / necks[0]);
    assert!(t.t_ext > 0.0 && t.t_ext_err < 1e-3 * t.t_ext);
}

#[test]
fn curve_csv_round_trip() {
    let sym = SymmetryClass::new(4, 2).unwrap();
    let c = QuotientCurve::ellipsoid(3.0, sym, 64).unwrap();
    let back = QuotientCurve::from_csv(&c.to_csv()).unwrap();
    assert_eq!(back.len(), c.len());
    assert_eq!(back.sym(), c.sym());
    for (p, q) in back.nodes().iter().zip(c.nodes()) {
        assert_relative_eq!(p[0], q[0], max_relative = 1e-11);
        assert_relative_eq!(p[1], q[1], max_relative = 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ellipsoid_nodes_lie_on_the_quadric(ell in 1.5f64..20.0, m in 16usize..200, frac in 0.0f64..0.5) {
        let sym = SymmetryClass::new(3, 2).unwrap();
        let c = QuotientCurve::ellipsoid_adapted(ell, sym, m, frac).unwrap();
        let (a, b) = ellipse_axes(ell, sym);
        prop_assert_eq!(c.len(), m);
        for p in c.nodes() {
            let q = (p[0] / a).powi(2) + (p[1] / b).powi(2);
            prop_assert!((q - 1.0).abs() < 1e-12);
        }
        prop_assert!(c.is_convex());
    }

    #[test]
    fn circle_area_matches_quarter_disc(r in 0.5f64..10.0, m in 64usize..256) {
        let sym = SymmetryClass::new(3, 2).unwrap();
        let c = QuotientCurve::quarter_circle(r, sym, m).unwrap();
        let exact = PI * r * r / 4.0;
        prop_assert!((c.enclosed_area() - exact).abs() < 1e-3 * exact);
    }
}
