use crate::error::Result;
use crate::interp::Pchip;

use super::curve::{dist, exterior_angle, QuotientCurve};

/// Node redistribution: equidistribution of `1 + A |kappa|` over arc length,
/// with `A` set so that `fraction` of the nodes follow the turning angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemeshPolicy {
    pub fraction: f64,
    pub ratio_trigger: f64,
    pub smoothing_passes: usize,
}

impl Default for RemeshPolicy {
    fn default() -> Self {
        Self { fraction: 0.15, ratio_trigger: 2.0, smoothing_passes: 2 }
    }
}

struct Layout {
    arc: Vec<f64>,
    cum: Vec<f64>,
    seg_weight: Vec<f64>,
}

fn layout(nodes: &[[f64; 2]], policy: &RemeshPolicy) -> Layout {
    let n = nodes.len();
    let m = n - 1;
    let mut arc = vec![0.0; n];
    for i in 1..n {
        arc[i] = arc[i - 1] + dist(nodes[i - 1], nodes[i]);
    }
    // turning angle per node, then a curvature estimate per node
    let mut kappa = vec![0.0; n];
    let mut total_turn = 0.0;
    for i in 1..m {
        let th = exterior_angle(nodes[i - 1], nodes[i], nodes[i + 1]);
        total_turn += th;
        kappa[i] = 2.0 * th / (arc[i + 1] - arc[i - 1]);
    }
    // axis nodes carry the half angle of the reflected corner
    let th0 = 2.0 * ((nodes[0][1] - nodes[1][1]).atan2(nodes[1][0]));
    let thm = 2.0 * ((nodes[m][0] - nodes[m - 1][0]).atan2(nodes[m - 1][1]));
    kappa[0] = th0 / arc[1];
    kappa[m] = thm / (arc[m] - arc[m - 1]);
    total_turn += 0.5 * (th0 + thm);
    for _ in 0..policy.smoothing_passes {
        let prev = kappa.clone();
        for i in 0..n {
            let l = if i == 0 { prev[1] } else { prev[i - 1] };
            let r = if i == m { prev[m - 1] } else { prev[i + 1] };
            kappa[i] = 0.25 * (l + r) + 0.5 * prev[i];
        }
    }
    let len = arc[m];
    let weight = policy.fraction * len / ((1.0 - policy.fraction) * total_turn.max(1e-300));
    let mut cum = vec![0.0; n];
    let mut seg_weight = vec![0.0; m];
    for i in 0..m {
        let w = 1.0 + weight * 0.5 * (kappa[i] + kappa[i + 1]);
        seg_weight[i] = w;
        cum[i + 1] = cum[i] + w * (arc[i + 1] - arc[i]);
    }
    Layout { arc, cum, seg_weight }
}

/// Largest deviation factor of a segment from its equidistributed target,
/// `max(actual/target, target/actual)`.
pub fn spacing_deviation(c: &QuotientCurve, policy: &RemeshPolicy) -> f64 {
    let lay = layout(c.nodes(), policy);
    let m = c.len() - 1;
    let target = lay.cum[m] / m as f64;
    let mut worst = 1.0f64;
    for i in 0..m {
        let q = lay.seg_weight[i] * (lay.arc[i + 1] - lay.arc[i]) / target;
        worst = worst.max(q).max(1.0 / q);
    }
    worst
}

pub fn needs_remesh(c: &QuotientCurve, policy: &RemeshPolicy) -> bool {
    spacing_deviation(c, policy) > policy.ratio_trigger
}

/// Redistributes the nodes (count unchanged) by monotone cubic resampling of
/// `r(s)` and `y(s)` over chord length, with reflected ghost nodes so that the
/// axis symmetries are respected at both ends.
pub fn remesh(c: &QuotientCurve, policy: &RemeshPolicy) -> Result<QuotientCurve> {
    let nodes = c.nodes();
    let n = nodes.len();
    let m = n - 1;
    let lay = layout(nodes, policy);
    let len = lay.arc[m];
    let ghosts = 3.min(m - 1);
    let mut s = Vec::with_capacity(n + 2 * ghosts);
    let mut r = Vec::with_capacity(n + 2 * ghosts);
    let mut y = Vec::with_capacity(n + 2 * ghosts);
    for j in (1..=ghosts).rev() {
        s.push(-lay.arc[j]);
        r.push(-nodes[j][0]);
        y.push(nodes[j][1]);
    }
    for i in 0..n {
        s.push(lay.arc[i]);
        r.push(nodes[i][0]);
        y.push(nodes[i][1]);
    }
    for j in 1..=ghosts {
        s.push(2.0 * len - lay.arc[m - j]);
        r.push(nodes[m - j][0]);
        y.push(-nodes[m - j][1]);
    }
    let rs = Pchip::new(s.clone(), r)?;
    let ys = Pchip::new(s, y)?;
    let total = lay.cum[m];
    let mut out = Vec::with_capacity(n);
    out.push([0.0, nodes[0][1]]);
    let mut j = 0;
    for i in 1..m {
        let target = total * i as f64 / m as f64;
        while lay.cum[j + 1] < target {
            j += 1;
        }
        let frac = (target - lay.cum[j]) / (lay.cum[j + 1] - lay.cum[j]);
        let sv = lay.arc[j] + frac * (lay.arc[j + 1] - lay.arc[j]);
        out.push([rs.eval(sv), ys.eval(sv)]);
    }
    out.push([nodes[m][0], 0.0]);
    QuotientCurve::new(out, c.t(), c.frame(), c.sym())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::SymmetryClass;

    #[test]
    fn circle_is_already_equidistributed() {
        let sym = SymmetryClass::new(3, 2).unwrap();
        let c = QuotientCurve::quarter_circle(1.0, sym, 64).unwrap();
        let p = RemeshPolicy::default();
        assert!(spacing_deviation(&c, &p) < 1.01);
        let again = remesh(&c, &p).unwrap();
        for (a, b) in again.nodes().iter().zip(c.nodes()) {
            assert!(dist(*a, *b) < 1e-3);
            assert!((a[0].hypot(a[1]) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn uniform_ellipse_triggers_and_adapts() {
        let sym = SymmetryClass::new(3, 2).unwrap();
        let c = QuotientCurve::ellipsoid(6.0, sym, 200).unwrap();
        let p = RemeshPolicy::default();
        assert!(needs_remesh(&c, &p));
        let fine = remesh(&c, &p).unwrap();
        assert!(fine.min_spacing() < 0.5 * c.min_spacing());
        assert_eq!(fine.len(), c.len());
        assert_eq!(fine.tip(), c.tip());
        assert_eq!(fine.neck(), c.neck());
    }
}
