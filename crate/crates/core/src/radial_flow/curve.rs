use std::fmt;

use crate::error::{ensure, Error, Result};
use crate::symmetry::SymmetryClass;

/// Minimum number of nodes accepted for a quotient curve.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Unrescaled,
    Renormalized,
}

impl Frame {
    pub fn as_str(self) -> &'static str {
        match self {
            Frame::Unrescaled => "unrescaled",
            Frame::Renormalized => "renormalized",
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lagrangian polyline in the closed quarter plane `{r >= 0, y >= 0}`, running
/// from the node on the y-axis to the node on the r-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientCurve {
    nodes: Vec<[f64; 2]>,
    t: f64,
    frame: Frame,
    sym: SymmetryClass,
}

impl QuotientCurve {
    pub fn new(nodes: Vec<[f64; 2]>, t: f64, frame: Frame, sym: SymmetryClass) -> Result<Self> {
        check_nodes(&nodes)?;
        ensure(t.is_finite(), || format!("non-finite time {t}"))?;
        Ok(Self { nodes, t, frame, sym })
    }

    #[cfg(test)]
    pub(crate) fn from_parts_unchecked(
        nodes: Vec<[f64; 2]>,
        t: f64,
        frame: Frame,
        sym: SymmetryClass,
    ) -> Self {
        Self { nodes, t, frame, sym }
    }

    /// Quarter circle of radius `radius` with uniform arc length.
    pub fn quarter_circle(radius: f64, sym: SymmetryClass, m: usize) -> Result<Self> {
        ensure(radius.is_finite() && radius > 0.0, || format!("invalid radius {radius}"))?;
        check_count(m)?;
        let nodes = (0..m)
            .map(|i| {
                if i == 0 {
                    [0.0, radius]
                } else if i == m - 1 {
                    [radius, 0.0]
                } else {
                    let th = std::f64::consts::FRAC_PI_2 * i as f64 / (m - 1) as f64;
                    [radius * th.sin(), radius * th.cos()]
                }
            })
            .collect();
        Self::new(nodes, 0.0, Frame::Unrescaled, sym)
    }

    /// Quarter ellipse `r^2/(k l)^2 + y^2 = 2(n-k)` with uniform arc length.
    pub fn ellipsoid(ell: f64, sym: SymmetryClass, m: usize) -> Result<Self> {
        Self::ellipsoid_adapted(ell, sym, m, 0.0)
    }

    /// Quarter ellipse with a fraction `fraction` of the nodes distributed by
    /// turning angle, the rest by arc length. Every node lies on the quadric.
    pub fn ellipsoid_adapted(ell: f64, sym: SymmetryClass, m: usize, fraction: f64) -> Result<Self> {
        ensure(ell.is_finite() && ell > 0.0, || format!("invalid ellipsoid scale {ell}"))?;
        let (a, b) = ellipse_axes(ell, sym);
        Self::from_parametric(
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
            sym,
            m,
            fraction,
        )
    }

    /// Discretizes a curve `p(theta)`, `theta in [0, theta_end]`, that starts on
    /// the y-axis and ends on the r-axis.
    pub fn from_parametric(
        p: impl Fn(f64) -> [f64; 2],
        theta_end: f64,
        sym: SymmetryClass,
        m: usize,
        fraction: f64,
    ) -> Result<Self> {
        check_count(m)?;
        ensure((0.0..1.0).contains(&fraction), || format!("adapt fraction {fraction} not in [0,1)"))?;
        let fine = 64 * m;
        let params: Vec<f64> = (0..=fine).map(|i| theta_end * i as f64 / fine as f64).collect();
        let pts: Vec<[f64; 2]> = params.iter().map(|&t| p(t)).collect();
        let mut arc = vec![0.0; fine + 1];
        let mut turn = vec![0.0; fine + 1];
        for i in 1..=fine {
            arc[i] = arc[i - 1] + dist(pts[i - 1], pts[i]);
            let da = if i == 1 {
                0.0
            } else {
                exterior_angle(pts[i - 2], pts[i - 1], pts[i])
            };
            turn[i] = turn[i - 1] + da;
        }
        let total_len = arc[fine];
        let total_turn = turn[fine].max(1e-300);
        let weight = fraction * total_len / ((1.0 - fraction) * total_turn);
        let w: Vec<f64> = arc.iter().zip(&turn).map(|(s, th)| s + weight * th).collect();
        let mut nodes = Vec::with_capacity(m);
        let mut j = 0;
        for i in 0..m {
            if i == 0 {
                nodes.push(p(0.0));
                continue;
            }
            if i == m - 1 {
                nodes.push(p(theta_end));
                continue;
            }
            let target = w[fine] * i as f64 / (m - 1) as f64;
            while w[j + 1] < target {
                j += 1;
            }
            let frac = (target - w[j]) / (w[j + 1] - w[j]);
            nodes.push(p(params[j] + frac * (params[j + 1] - params[j])));
        }
        Self::new(nodes, 0.0, Frame::Unrescaled, sym)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<[f64; 2]> {
        &mut self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn sym(&self) -> SymmetryClass {
        self.sym
    }

    /// Height of the node on the y-axis.
    pub fn neck(&self) -> f64 {
        self.nodes[0][1]
    }

    /// Abscissa of the node on the r-axis, the tip position `d`.
    pub fn tip(&self) -> f64 {
        self.nodes[self.nodes.len() - 1][0]
    }

    pub fn length(&self) -> f64 {
        self.nodes.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| dist(w[0], w[1])).fold(f64::INFINITY, f64::min)
    }

    /// Area enclosed by the curve and the two axes.
    pub fn enclosed_area(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.nodes.windows(2) {
            acc += w[0][0] * w[1][1] - w[1][0] * w[0][1];
        }
        -0.5 * acc
    }

    /// Ratio of the largest to the smallest node distance from the origin,
    /// which is the centroid of the induced hypersurface by symmetry.
    pub fn roundness(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for p in &self.nodes {
            let d = p[0].hypot(p[1]);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        hi / lo
    }

    /// True when every interior turning angle has the convex sign.
    pub fn is_convex(&self) -> bool {
        self.nodes.windows(3).all(|w| cross(sub(w[1], w[0]), sub(w[2], w[1])) < 0.0)
    }

    /// Returns a scaled copy with the given frame and time tag.
    pub fn scaled(&self, factor: f64, t: f64, frame: Frame) -> Self {
        let nodes = self.nodes.iter().map(|p| [p[0] * factor, p[1] * factor]).collect();
        Self { nodes, t, frame, sym: self.sym }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# n={}\n# k={}\n# t={:.17e}\n# frame={}\ni,r,y\n",
            self.sym.n(),
            self.sym.k(),
            self.t,
            self.frame
        );
        for (i, p) in self.nodes.iter().enumerate() {
            s.push_str(&format!("{i},{:.17e},{:.17e}\n", p[0], p[1]));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("snapshot csv: {m}"));
        let mut n = None;
        let mut k = None;
        let mut t = None;
        let mut frame = None;
        let mut nodes = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, val) = rest.split_once('=').ok_or_else(|| bad("header"))?;
                match key {
                    "n" => n = val.parse::<usize>().ok(),
                    "k" => k = val.parse::<usize>().ok(),
                    "t" => t = val.parse::<f64>().ok(),
                    "frame" => {
                        frame = match val {
                            "unrescaled" => Some(Frame::Unrescaled),
                            "renormalized" => Some(Frame::Renormalized),
                            _ => None,
                        }
                    }
                    _ => {}
                }
            } else if line == "i,r,y" || line.is_empty() {
                continue;
            } else {
                let mut it = line.split(',');
                it.next();
                let r = it.next().and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad("row"))?;
                let y = it.next().and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad("row"))?;
                nodes.push([r, y]);
            }
        }
        let sym = SymmetryClass::new(n.ok_or_else(|| bad("n"))?, k.ok_or_else(|| bad("k"))?)?;
        Self::new(nodes, t.ok_or_else(|| bad("t"))?, frame.ok_or_else(|| bad("frame"))?, sym)
    }
}

/// Semi-axes `(r-intercept, y-intercept)` of the quarter ellipse.
pub fn ellipse_axes(ell: f64, sym: SymmetryClass) -> (f64, f64) {
    let b = sym.cylinder_radius();
    (sym.k() as f64 * ell * b, b)
}

fn check_count(m: usize) -> Result<()> {
    if m < MIN_NODES {
        return Err(Error::InvalidParameter(format!(
            "quotient curve needs at least {MIN_NODES} nodes, got {m}"
        )));
    }
    Ok(())
}

pub(crate) fn check_nodes(nodes: &[[f64; 2]]) -> Result<()> {
    check_count(nodes.len())?;
    let m = nodes.len() - 1;
    if nodes.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::NonFinite("quotient curve node".into()));
    }
    if nodes[0][0] != 0.0 || nodes[m][1] != 0.0 {
        return Err(Error::InvalidParameter(
            "first node must lie on the y-axis and last on the r-axis".into(),
        ));
    }
    if let Some(i) = monotonicity_violation(nodes) {
        return Err(Error::InvalidParameter(format!(
            "non-monotone parametrization at node {i}"
        )));
    }
    Ok(())
}

/// Index of the first node breaking `r` increasing / `y` decreasing, or
/// an interior node leaving the open quarter plane.
pub(crate) fn monotonicity_violation(nodes: &[[f64; 2]]) -> Option<usize> {
    let m = nodes.len() - 1;
    for i in 1..=m {
        let (p, q) = (nodes[i - 1], nodes[i]);
        if !(q[0] > p[0] && q[1] < p[1]) {
            return Some(i);
        }
        if i < m && !(q[0] > 0.0 && q[1] > 0.0) {
            return Some(i);
        }
    }
    None
}

#[inline]
pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm(a: [f64; 2]) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

#[inline]
pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    norm(sub(b, a))
}

/// Unsigned exterior angle at `b` for the path `a -> b -> c`.
pub(crate) fn exterior_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let u = sub(b, a);
    let v = sub(c, b);
    cross(u, v).atan2(u[0] * v[0] + u[1] * v[1]).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym32() -> SymmetryClass {
        SymmetryClass::new(3, 2).unwrap()
    }

    #[test]
    fn ellipse_intercepts_and_quadric() {
        let sym = sym32();
        let c = QuotientCurve::ellipsoid(5.0, sym, 200).unwrap();
        assert!((c.tip() - 10.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((c.neck() - 2f64.sqrt()).abs() < 1e-15);
        for p in c.nodes() {
            let q = p[0] * p[0] / 100.0 + p[1] * p[1];
            assert!((q - 2.0).abs() < 1e-12);
        }
        let adapted = QuotientCurve::ellipsoid_adapted(5.0, sym, 200, 0.3).unwrap();
        assert!(adapted.min_spacing() < c.min_spacing());
    }

    #[test]
    fn uniform_layout() {
        let c = QuotientCurve::ellipsoid(3.0, sym32(), 101).unwrap();
        let h: Vec<f64> = c.nodes().windows(2).map(|w| dist(w[0], w[1])).collect();
        let mean = c.length() / 100.0;
        assert!(h.iter().all(|x| (x / mean - 1.0).abs() < 0.02));
    }

    #[test]
    fn rejects_bad_input() {
        let sym = sym32();
        assert!(QuotientCurve::ellipsoid(1.0, sym, 15).is_err());
        assert!(QuotientCurve::ellipsoid(f64::NAN, sym, 64).is_err());
        let mut nodes = QuotientCurve::quarter_circle(1.0, sym, 32).unwrap().nodes().to_vec();
        nodes.swap(3, 4);
        assert!(QuotientCurve::new(nodes, 0.0, Frame::Unrescaled, sym).is_err());
    }

    #[test]
    fn circle_area_and_csv_round_trip() {
        let c = QuotientCurve::quarter_circle(2.0, sym32(), 400).unwrap();
        assert!((c.enclosed_area() - std::f64::consts::PI).abs() < 1e-4);
        assert!((c.roundness() - 1.0).abs() < 1e-14);
        let back = QuotientCurve::from_csv(&c.to_csv()).unwrap();
        assert_eq!(back, c);
    }
}
