use crate::error::{Error, Result};
use crate::symmetry::SymmetryClass;

use super::curve::{cross, norm, sub, Frame, QuotientCurve};

/// Per-node curvature, outward normal and inward normal speed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Kinematics {
    pub curvature: Vec<f64>,
    pub normal: Vec<[f64; 2]>,
    pub speed: Vec<f64>,
}

/// Inward normal speed `V = kappa + (k-1) nu_r / r + (n-k) nu_y / y` at every
/// node, minus `<x, nu>/2` in the renormalized frame. The axis nodes use the
/// odd ghost reflection, where the singular quotient tends to the curvature.
pub fn curve_velocity(c: &QuotientCurve) -> Result<Kinematics> {
    let n = c.len();
    let mut kin = Kinematics {
        curvature: vec![0.0; n],
        normal: vec![[0.0; 2]; n],
        speed: vec![0.0; n],
    };
    kernel(
        c.nodes(),
        c.sym(),
        c.frame() == Frame::Renormalized,
        &mut kin.curvature,
        &mut kin.normal,
        &mut kin.speed,
    )?;
    Ok(kin)
}

pub(crate) fn kernel(
    p: &[[f64; 2]],
    sym: SymmetryClass,
    renormalized: bool,
    curvature: &mut [f64],
    normal: &mut [[f64; 2]],
    speed: &mut [f64],
) -> Result<()> {
    let m = p.len() - 1;
    let k = sym.k() as f64;
    let f = sym.fiber() as f64;
    let km1 = k - 1.0;
    let scale = p[0][1].max(p[m][0]);
    let floor = 1e-13 * scale;

    let h0 = norm(sub(p[1], p[0]));
    let hm = norm(sub(p[m], p[m - 1]));
    if !(h0 > 0.0 && hm > 0.0) {
        return Err(Error::DegenerateGeometry("coincident axis nodes".into()));
    }
    let y0 = p[0][1];
    let d = p[m][0];
    if !(y0 > floor && d > floor) {
        return Err(Error::DegenerateGeometry("curve collapsed onto an axis".into()));
    }
    let kappa0 = 2.0 * (y0 - p[1][1]) / (h0 * h0);
    curvature[0] = kappa0;
    normal[0] = [0.0, 1.0];
    speed[0] = k * kappa0 + f / y0 - if renormalized { 0.5 * y0 } else { 0.0 };
    let kappam = 2.0 * (d - p[m - 1][0]) / (hm * hm);
    curvature[m] = kappam;
    normal[m] = [1.0, 0.0];
    speed[m] = (1.0 + f) * kappam + km1 / d - if renormalized { 0.5 * d } else { 0.0 };

    let mut a = sub(p[1], p[0]);
    let mut ha = h0;
    for i in 1..m {
        let b = sub(p[i + 1], p[i]);
        let hb = norm(b);
        if !(hb > 0.0) {
            return Err(Error::DegenerateGeometry(format!("coincident nodes at {i}")));
        }
        let (r, y) = (p[i][0], p[i][1]);
        if !(r > floor && y > floor) {
            return Err(Error::DegenerateGeometry(format!("interior node {i} on an axis")));
        }
        let s = [a[0] + b[0], a[1] + b[1]];
        let kappa = -2.0 * cross(a, b) / (ha * hb * norm(s));
        let t = [hb * a[0] / ha + ha * b[0] / hb, hb * a[1] / ha + ha * b[1] / hb];
        let tl = norm(t);
        let nu = [-t[1] / tl, t[0] / tl];
        let forcing = km1 * nu[0] / r + f * nu[1] / y;
        let mut v = kappa + forcing;
        if renormalized {
            v -= 0.5 * (r * nu[0] + y * nu[1]);
        }
        curvature[i] = kappa;
        normal[i] = nu;
        speed[i] = v;
        a = b;
        ha = hb;
    }
    if speed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("normal speed".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_flow::curve::MIN_NODES;
    use proptest::prelude::*;

    #[test]
    fn round_sphere_speed() {
        for (n, k) in [(3, 2), (4, 2), (5, 3), (3, 1)] {
            let sym = SymmetryClass::new(n, k).unwrap();
            let c = QuotientCurve::quarter_circle(1.7, sym, 64).unwrap();
            let kin = curve_velocity(&c).unwrap();
            for v in &kin.speed {
                assert!((v - n as f64 / 1.7).abs() < 2e-3, "{n} {k} {v}");
            }
        }
    }

    #[test]
    fn cylinder_segment_is_static_in_renormalized_frame() {
        let sym = SymmetryClass::new(4, 2).unwrap();
        let h = sym.cylinder_radius();
        let mut nodes: Vec<[f64; 2]> = (0..40).map(|i| [i as f64 * 0.1, h]).collect();
        for i in 0..20 {
            nodes.push([4.0 + 0.5 * (i as f64 * 0.08).sin(), h * (1.0 - (i + 1) as f64 / 20.0)]);
        }
        let n = nodes.len();
        let mut curv = vec![0.0; n];
        let mut nrm = vec![[0.0; 2]; n];
        let mut sp = vec![0.0; n];
        kernel(&nodes, sym, true, &mut curv, &mut nrm, &mut sp).unwrap();
        for v in &sp[..38] {
            assert!(v.abs() < 1e-13);
        }
    }

    fn ellipse_nodes(a: f64, b: f64, m: usize) -> Vec<[f64; 2]> {
        QuotientCurve::from_parametric(
            |th| {
                if th == 0.0 {
                    [0.0, b]
                } else if th == std::f64::consts::FRAC_PI_2 {
                    [a, 0.0]
                } else {
                    [a * th.sin(), b * th.cos()]
                }
            },
            std::f64::consts::FRAC_PI_2,
            SymmetryClass::new(3, 2).unwrap(),
            m,
            0.0,
        )
        .unwrap()
        .nodes()
        .to_vec()
    }

    /// Graph-form speed `-U_t / sqrt(1 + U_r^2)` from analytic derivatives.
    fn graph_speed(a: f64, b: f64, r: f64, sym: SymmetryClass) -> f64 {
        let (n, k) = (sym.n() as f64, sym.k() as f64);
        let q = 1.0 - r * r / (a * a);
        let u = b * q.sqrt();
        let ur = -b * r / (a * a * q.sqrt());
        let urr = -b / (a * a * q.powf(1.5));
        let ut = urr / (1.0 + ur * ur) + (k - 1.0) * ur / r - (n - k) / u;
        -ut / (1.0 + ur * ur).sqrt()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_graph_form(a in 0.8f64..4.0, b in 0.8f64..3.0) {
            let sym = SymmetryClass::new(3, 2).unwrap();
            let mut errs = Vec::new();
            for m in [200usize, 400] {
                let nodes = ellipse_nodes(a, b, m);
                let c = QuotientCurve::new(nodes, 0.0, Frame::Unrescaled, sym).unwrap();
                let kin = curve_velocity(&c).unwrap();
                let i = m / 3;
                let r = c.nodes()[i][0];
                errs.push((kin.speed[i] - graph_speed(a, b, r, sym)).abs());
            }
            prop_assert!(errs[0] < 1e-3);
            prop_assert!(errs[1] < errs[0] / 3.0 || errs[1] < 1e-9);
        }
    }

    #[test]
    fn rejects_degenerate() {
        let sym = SymmetryClass::new(3, 2).unwrap();
        let mut nodes = ellipse_nodes(2.0, 1.0, MIN_NODES);
        nodes[5] = nodes[4];
        let c = QuotientCurve::from_parts_unchecked(nodes, 0.0, Frame::Unrescaled, sym);
        assert!(matches!(curve_velocity(&c), Err(Error::DegenerateGeometry(_))));
    }
}
