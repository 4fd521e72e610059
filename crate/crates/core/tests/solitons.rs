use std::f64::consts::FRAC_1_SQRT_2;

use ovals_core::soliton_atlas::{
    bowl_solve, foliation_divergence, shrinker_shoot, tail_shrinker_shoot, FoliationLeaf,
};
use ovals_core::SymmetryClass;

const TOL: f64 = 1e-10;

#[test]
fn compact_shrinker_obeys_the_quadratic_bound() {
    let (a, d) = (10.0, 3);
    let p = shrinker_shoot(a, d, TOL).unwrap();
    let cyl = (2.0 * (d as f64 - 1.0)).sqrt();
    for i in 0..=200 {
        let r = 0.5 * a * i as f64 / 200.0;
        let bound = cyl * (1.0 - (r * r - 3.0) / (2.0 * a * a));
        assert!(p.u_at(r).unwrap() <= bound, "r = {r}");
    }
    assert_eq!(p.u_at(a).unwrap(), 0.0);
}

#[test]
fn compact_shrinker_approaches_the_cylinder() {
    let cyl = 2.0;
    let gaps: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&a| (shrinker_shoot(a, 3, TOL).unwrap().u0() - cyl).abs()).collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
}

#[test]
fn shooting_is_stable_under_tolerance_halving() {
    let u = shrinker_shoot(10.0, 3, TOL).unwrap().u0();
    let v = shrinker_shoot(10.0, 3, TOL / 2.0).unwrap().u0();
    assert!(((u - v) / u).abs() < 1e-6, "{u} vs {v}");
}

#[test]
fn compact_leaves_are_nested_away_from_the_axis() {
    // the ordering only holds beyond the foliation threshold; near y = 0 larger a sits closer to the cylinder
    let lo = shrinker_shoot(10.0, 3, TOL).unwrap();
    let hi = shrinker_shoot(14.0, 3, TOL).unwrap();
    for i in 0..=100 {
        let r = 2.0 + 7.9 * i as f64 / 100.0;
        assert!(lo.u_at(r).unwrap() < hi.u_at(r).unwrap(), "r = {r}");
    }
}

#[test]
fn tail_shrinker_slope_and_convexity() {
    for b in [0.1, 0.2, 0.5] {
        let p = tail_shrinker_shoot(b, 3, 200.0).unwrap();
        assert!((p.end_slope() / b - 1.0).abs() < 0.02, "b = {b}: {}", p.end_slope());
        assert!(p.min_second_derivative(1.0) >= -1e-8, "b = {b}");
    }
}

#[test]
fn foliation_signs_hold_on_sampled_leaves() {
    let sym = SymmetryClass::new(3, 2).unwrap();
    let d = sym.tip_dimension();
    for a in [8.0, 12.0, 16.0] {
        let leaf = FoliationLeaf::Compact { profile: shrinker_shoot(a, d, TOL).unwrap(), eta: 1.0 };
        let v = foliation_divergence(&leaf, sym, 2.0, 200).unwrap();
        assert!(v.iter().all(|s| s.value <= 1e-8), "a = {a}");
    }
    for b in [0.1, 0.2, 0.4] {
        let leaf = FoliationLeaf::Tail { profile: tail_shrinker_shoot(b, d, 200.0).unwrap(), eta: 1.0 };
        let v = foliation_divergence(&leaf, sym, 2.0, 200).unwrap();
        assert!(v.iter().all(|s| s.value >= -1e-8), "b = {b}");
    }
}

#[test]
fn foliation_rejects_samples_below_the_threshold() {
    let sym = SymmetryClass::new(3, 2).unwrap();
    let leaf = FoliationLeaf::Compact { profile: shrinker_shoot(12.0, 2, TOL).unwrap(), eta: 1.0 };
    assert!(foliation_divergence(&leaf, sym, 1.5, 50).is_err());
}

#[test]
fn bowl_series_slope_and_translator_identity() {
    for d in [2, 3] {
        let b = bowl_solve(d, FRAC_1_SQRT_2, 50.0).unwrap();
        // power-series oracle at the tip
        assert!((b.numerical_second_derivative() + FRAC_1_SQRT_2 / d as f64).abs() < 1e-6);
        let (z, dz, _) = b.eval(0.0).unwrap();
        assert_eq!((z, dz), (0.0, 0.0));
        // dominant balance far out
        let (_, dz, _) = b.eval(50.0).unwrap();
        let limit = -FRAC_1_SQRT_2 / (d as f64 - 1.0);
        assert!((dz / 50.0 / limit - 1.0).abs() < 0.03, "d = {d}: {}", dz / 50.0);
        let samples = b.samples(0.5);
        for w in samples.windows(2) {
            assert!(w[1][1] < w[0][1] && w[1][2] < w[0][2]);
        }
        for i in 1..50 {
            assert!(b.translator_residual(i as f64).unwrap().abs() < 1e-6);
        }
    }
}
