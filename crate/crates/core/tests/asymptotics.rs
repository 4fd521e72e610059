use ovals_core::asymptotics::{
    monitor_estimates, verify_parabolic, verify_region, verify_width, FnProfile, MonitorParams, ProfileView, Region,
    RegionParams, WidthSample,
};
use ovals_core::radial_flow::{
    renormalize_trajectory, run_to_extinction, ChartOptions, QuotientCurve, RemeshPolicy, RunConfig, TauCalibration,
};
use ovals_core::SymmetryClass;
use proptest::prelude::*;

#[test]
fn long_ellipsoid_window_is_close_to_the_asymptotics() {
    let sym = SymmetryClass::new(3, 2).unwrap();
    let ell = 4.0;
    let c = QuotientCurve::ellipsoid_adapted(ell, sym, 192, 0.08).unwrap();
    let cfg = RunConfig {
        remesh: Some(RemeshPolicy { fraction: 0.08, ..Default::default() }),
        stop_area_ratio: 1e-3,
        ..Default::default()
    };
    let t = run_to_extinction(&c, &cfg).unwrap();
    let rr = renormalize_trajectory(&t, TauCalibration::Ellipsoid { ell }, &ChartOptions::default()).unwrap();
    let n = rr.samples.len();
    let window = &rr.samples[n - 10..];
    let params = RegionParams::default();
    let par = verify_region(window, Region::Parabolic, &params).unwrap();
    assert!((par.latest().coefficients[0] - 1.0).abs() < 0.15);
    let inter = verify_region(window, Region::Intermediate, &params).unwrap();
    assert!(inter.latest().deviation < 0.15);
    for r in [&par, &inter] {
        assert_eq!(r.points.len(), window.len());
        assert!(r.deviations().iter().all(|d| *d >= 0.0 && d.is_finite()));
    }
    let w = verify_region(window, Region::Width, &params).unwrap();
    let h = w.latest().coefficients[1];
    assert!(h > 0.35 && h < 0.65, "{h}");
    let mon = monitor_estimates(window, &MonitorParams::defaults(sym)).unwrap();
    assert!(mon.max_quadratic_concavity().unwrap() <= 1e-3);
    assert!(mon.min_convexity_ratio() > 0.0);
}

#[test]
fn width_law_on_exact_tips() {
    let samples: Vec<WidthSample> = [-50.0f64, -100.0, -200.0]
        .iter()
        .map(|&tau| WidthSample { tau, tip: (2.0 * tau.abs()).sqrt(), tip_curvature: 0.5 * (2.0 * tau.abs()).sqrt() })
        .collect();
    let rep = verify_width(&samples).unwrap();
    for p in &rep.points {
        assert!(p.deviation < 1e-15);
        assert!(p.secondary.unwrap() < 1e-15);
    }
}

#[test]
fn coverage_errors_are_reported() {
    let sym = SymmetryClass::new(3, 2).unwrap();
    let short = FnProfile { sym, tau: -100.0, extent: 1.0, f: |_| 2f64.sqrt() };
    let views: [&dyn ProfileView; 1] = [&short];
    assert!(verify_parabolic(&views, &RegionParams::default()).is_err());
    assert!(verify_parabolic(&[], &RegionParams::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parabolic_fit_recovers_the_coefficient(tau in -2000.0f64..-20.0, c in 0.5f64..1.5) {
        let sym = SymmetryClass::new(3, 2).unwrap();
        let cyl = sym.cylinder_radius();
        let k = sym.k() as f64;
        let p = FnProfile { sym, tau, extent: 6.0, f: move |r: f64| cyl * (1.0 - c * (r * r - 2.0 * k) / (4.0 * tau.abs())) };
        let views: [&dyn ProfileView; 1] = [&p];
        let rep = verify_parabolic(&views, &RegionParams::default()).unwrap();
        prop_assert!((rep.latest().coefficients[0] - c).abs() < 1e-9);
        // |tau| times the sup error is (c - 1) cyl max|rho^2 - 2k| / 4
        let expect = (c - 1.0).abs() * cyl * (9.0 - 2.0 * k).max(2.0 * k) / 4.0;
        prop_assert!((rep.latest().deviation - expect).abs() < 1e-8);
    }
}
