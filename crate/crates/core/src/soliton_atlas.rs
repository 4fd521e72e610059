//! Profiles of rotationally symmetric shrinkers and the bowl translator, and
//! the sign of the weighted divergence along shifted shrinker leaves.

use crate::error::{ensure, Error, Result};
use crate::ode::{hermite, integrate, OdePoint, Tolerance};
use crate::symmetry::SymmetryClass;

/// Slope at which shrinker shooting leaves the tip chart `y = Y(u)`.
const SWITCH_SLOPE: f64 = 0.1;

/// Point of a profile curve in `(axis, radius)` coordinates with its outward
/// unit normal and the mean curvature of the surface of revolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafGeometry {
    pub x: [f64; 2],
    pub nu: [f64; 2],
    pub h: f64,
}

fn graph_geometry(y: f64, u: f64, du: f64, ddu: f64, d: f64) -> LeafGeometry {
    let w = (1.0 + du * du).sqrt();
    LeafGeometry {
        x: [y, u],
        nu: [-du / w, 1.0 / w],
        h: -ddu / (w * w * w) + (d - 1.0) / (u * w),
    }
}

fn tip_geometry(u: f64, y: f64, dy: f64, ddy: f64, d: f64) -> LeafGeometry {
    let w = (1.0 + dy * dy).sqrt();
    let radial = if u > 0.0 { dy / u } else { ddy };
    LeafGeometry {
        x: [y, u],
        nu: [1.0 / w, -dy / w],
        h: -(ddy / (w * w * w) + (d - 1.0) * radial / w),
    }
}

/// Compact shrinker profile `u_a` on `[0, a]` with `u_a(a) = 0`.
#[derive(Debug, Clone)]
pub struct ShrinkerProfile {
    pub a: f64,
    pub d: usize,
    u_start: f64,
    tip: Vec<OdePoint<2>>,
    graph: Vec<OdePoint<2>>,
}

impl ShrinkerProfile {
    fn c2(&self) -> f64 {
        -self.a / (4.0 * self.d as f64)
    }

    fn c4(&self) -> f64 {
        let c2 = self.c2();
        (8.0 * c2 * c2 * c2 + 0.5 * c2) / (4.0 * (self.d as f64 + 2.0))
    }

    /// Tip chart `(Y, Y_u, Y_uu)` at radius `u`.
    fn tip_chart(&self, u: f64) -> (f64, f64, f64) {
        if u <= self.u_start {
            let (c2, c4) = (self.c2(), self.c4());
            let u2 = u * u;
            (self.a + c2 * u2 + c4 * u2 * u2, 2.0 * c2 * u + 4.0 * c4 * u2 * u, 2.0 * c2 + 12.0 * c4 * u2)
        } else {
            let (y, dy) = hermite(&self.tip, u, 0).expect("inside tip chart");
            let (_, ddy) = hermite(&self.tip, u, 1).expect("inside tip chart");
            (y, dy, ddy)
        }
    }

    /// Axis position where the profile leaves the tip chart.
    pub fn y_switch(&self) -> f64 {
        self.graph[0].t
    }

    pub fn u_switch(&self) -> f64 {
        self.tip.last().map(|p| p.t).unwrap_or(self.u_start)
    }

    /// `u_a(0)`.
    pub fn u0(&self) -> f64 {
        self.graph.last().expect("graph chart").y[0]
    }

    /// Profile radius at axis position `y`.
    pub fn u_at(&self, y: f64) -> Result<f64> {
        Ok(self.geometry_at(y)?.x[1])
    }

    /// Geometry at axis position `y in [0, a]`.
    pub fn geometry_at(&self, y: f64) -> Result<LeafGeometry> {
        if !(0.0..=self.a).contains(&y) {
            return Err(Error::OutOfRange { target: y, lo: 0.0, hi: self.a });
        }
        let d = self.d as f64;
        if y <= self.y_switch() {
            let (u, du) = hermite(&self.graph, y, 0).expect("inside graph chart");
            let (_, ddu) = hermite(&self.graph, y, 1).expect("inside graph chart");
            return Ok(graph_geometry(y, u, du, ddu, d));
        }
        if y == self.a {
            return Ok(self.tip_geometry_at(0.0));
        }
        // invert the decreasing tip chart
        let (mut lo, mut hi) = (0.0, self.u_switch());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.tip_chart(mid).0 > y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1e-300) {
                break;
            }
        }
        Ok(self.tip_geometry_at(0.5 * (lo + hi)))
    }

    /// Geometry of the tip chart at radius `u in [0, u_switch]`.
    pub fn tip_geometry_at(&self, u: f64) -> LeafGeometry {
        let (y, dy, ddy) = self.tip_chart(u);
        tip_geometry(u, y, dy, ddy, self.d as f64)
    }

    /// Samples `(y, u, u')` of the graph chart on a uniform grid.
    pub fn samples(&self, count: usize) -> Vec<[f64; 3]> {
        let ys = self.y_switch();
        (0..=count)
            .map(|i| {
                let y = ys * i as f64 / count as f64;
                let (u, du) = hermite(&self.graph, y, 0).expect("inside graph chart");
                [y, u, du]
            })
            .collect()
    }

    pub fn to_csv(&self, count: usize) -> String {
        let mut s = String::from("y,u,du\n");
        for [y, u, du] in self.samples(count) {
            s.push_str(&format!("{y:.12e},{u:.12e},{du:.12e}\n"));
        }
        s
    }
}

/// Shoots the compact shrinker with `u_a(a) = 0` from its tip towards `y = 0`.
pub fn shrinker_shoot(a: f64, d: usize, tol: f64) -> Result<ShrinkerProfile> {
    ensure(a.is_finite() && a >= 2.0, || format!("shrinker parameter a = {a} below 2"))?;
    ensure(d >= 2, || format!("shrinker dimension d = {d} below 2"))?;
    ensure(tol > 0.0 && tol < 1e-2, || format!("invalid tolerance {tol}"))?;
    let df = d as f64;
    let mut prof = ShrinkerProfile {
        a,
        d,
        u_start: 1e-3 * (2.0 * df / a).min(1.0),
        tip: Vec::new(),
        graph: Vec::new(),
    };
    let u0 = prof.u_start;
    let (y0, dy0, _) = prof.tip_chart(u0);
    let tip_rhs = move |u: f64, s: &[f64; 2]| {
        let (y, dy) = (s[0], s[1]);
        [dy, -(1.0 + dy * dy) * ((df - 1.0) * dy / u + 0.5 * (y - u * dy))]
    };
    let u_cap = 4.0 * (2.0 * (df - 1.0)).sqrt() + 4.0;
    let tip = integrate(tip_rhs, u0, [y0, dy0], u_cap, Tolerance::new(tol), |_, s| {
        s[1] <= -SWITCH_SLOPE
    })?;
    let last = tip.last().expect("nonempty trajectory");
    if last.y[1] > -SWITCH_SLOPE {
        return Err(Error::Integration(format!("tip chart never turned (a = {a})")));
    }
    let (ys, us, slope) = (last.y[0], last.t, 1.0 / last.y[1]);
    if ys <= 0.0 {
        return Err(Error::Integration(format!("tip chart crossed y = 0 (a = {a})")));
    }
    let graph_rhs = move |y: f64, s: &[f64; 2]| {
        let (u, du) = (s[0], s[1]);
        [du, (1.0 + du * du) * (0.5 * y * du + (df - 1.0) / u - 0.5 * u)]
    };
    let graph = integrate(graph_rhs, ys, [us, slope], 0.0, Tolerance::new(tol), |_, s| {
        !(s[0] > 0.0) || s[0] > 1e6
    })?;
    let end = graph.last().expect("nonempty trajectory");
    if end.t != 0.0 || !(end.y[0] > 0.0) {
        return Err(Error::Integration(format!(
            "shrinker profile blew up before y = 0 (a = {a}, stopped at y = {:.4})",
            end.t
        )));
    }
    prof.tip = tip;
    prof.graph = graph;
    Ok(prof)
}

/// Noncompact convex shrinker profile with asymptotic slope `b`.
#[derive(Debug, Clone)]
pub struct TailShrinkerProfile {
    pub b: f64,
    pub d: usize,
    pub r_max: f64,
    traj: Vec<OdePoint<2>>,
}

impl TailShrinkerProfile {
    pub fn geometry_at(&self, y: f64) -> Result<LeafGeometry> {
        if !(0.0..=self.r_max).contains(&y) {
            return Err(Error::OutOfRange { target: y, lo: 0.0, hi: self.r_max });
        }
        let (u, du) = hermite(&self.traj, y, 0)
            .ok_or(Error::OutOfRange { target: y, lo: 0.0, hi: self.r_max })?;
        let (_, ddu) = hermite(&self.traj, y, 1).expect("inside trajectory");
        Ok(graph_geometry(y, u, du, ddu, self.d as f64))
    }

    pub fn u_at(&self, y: f64) -> Result<f64> {
        Ok(self.geometry_at(y)?.x[1])
    }

    /// `u'(r_max)`.
    pub fn end_slope(&self) -> f64 {
        hermite(&self.traj, self.r_max, 0).expect("inside trajectory").1
    }

    /// Smallest second derivative over `[y_lo, r_max]`.
    pub fn min_second_derivative(&self, y_lo: f64) -> f64 {
        self.traj
            .iter()
            .filter(|p| p.t >= y_lo && p.t <= self.r_max)
            .map(|p| p.f[1])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn samples(&self, count: usize) -> Vec<[f64; 3]> {
        (0..=count)
            .map(|i| {
                let y = self.r_max * i as f64 / count as f64;
                let (u, du) = hermite(&self.traj, y, 0).expect("inside trajectory");
                [y, u, du]
            })
            .collect()
    }

    pub fn to_csv(&self, count: usize) -> String {
        let mut s = String::from("y,u,du\n");
        for [y, u, du] in self.samples(count) {
            s.push_str(&format!("{y:.12e},{u:.12e},{du:.12e}\n"));
        }
        s
    }
}

/// Large-`y` expansion `u = b y + c/y + e/y^3 + f/y^5` and its slope.
fn tail_expansion(b: f64, d: f64, y: f64) -> (f64, f64) {
    let b2 = b * b;
    let c = (d - 1.0) / b;
    let e = -(d - 1.0) * (b2 * d + b2 + d - 1.0) / (2.0 * b2 * b * (b2 + 1.0));
    let f = (d - 1.0)
        * (3.0 * b2 * b2 * d * d + 21.0 * b2 * b2 + 6.0 * b2 * d * d + 2.0 * b2 * d - 8.0 * b2
            + 3.0 * d * d
            - 6.0 * d
            + 3.0)
        / (6.0 * b2 * b2 * b * (b2 + 1.0) * (b2 + 1.0));
    let (y2, y3) = (y * y, y * y * y);
    let u = b * y + c / y + e / y3 + f / (y3 * y2);
    let du = b - c / y2 - 3.0 * e / (y2 * y2) - 5.0 * f / (y3 * y3);
    (u, du)
}

/// Integrates the tail shrinker inward from `r_max`, starting on its
/// large-`y` expansion.
pub fn tail_shrinker_shoot(b: f64, d: usize, r_max: f64) -> Result<TailShrinkerProfile> {
    ensure(b > 0.0 && b <= 1.0, || format!("tail slope b = {b} outside (0, 1]"))?;
    ensure(d >= 2, || format!("shrinker dimension d = {d} below 2"))?;
    ensure(r_max >= 20.0, || format!("r_max = {r_max} below 20"))?;
    let df = d as f64;
    // start far enough out for the expansion to be accurate
    let r_start = r_max.max(40.0 / b);
    let (u0, du0) = tail_expansion(b, df, r_start);
    let rhs = move |y: f64, s: &[f64; 2]| {
        let (u, du) = (s[0], s[1]);
        [du, (1.0 + du * du) * (0.5 * y * du + (df - 1.0) / u - 0.5 * u)]
    };
    let traj = integrate(rhs, r_start, [u0, du0], 0.0, Tolerance::new(1e-11), |_, s| {
        !(s[0] > 0.0) || s[0] > 1e8
    })?;
    let end = traj.last().expect("nonempty trajectory");
    if end.t != 0.0 {
        return Err(Error::Integration(format!("tail shrinker b = {b} degenerated at y = {}", end.t)));
    }
    let prof = TailShrinkerProfile { b, d, r_max, traj };
    let worst = prof.min_second_derivative(1.0);
    if worst < -1e-8 {
        return Err(Error::Integration(format!(
            "tail shrinker b = {b} lost convexity (u'' = {worst:.3e})"
        )));
    }
    Ok(prof)
}

/// Bowl translator profile `Z(s)` with `Z(0) = Z'(0) = 0`.
#[derive(Debug, Clone)]
pub struct BowlProfile {
    pub d: usize,
    pub speed: f64,
    pub s_max: f64,
    s_start: f64,
    traj: Vec<OdePoint<2>>,
}

impl BowlProfile {
    fn alpha(&self) -> f64 {
        self.speed / (2.0 * self.d as f64)
    }

    fn c4(&self) -> f64 {
        let a = self.alpha();
        -2.0 * a * a * a / (self.d as f64 + 2.0)
    }

    /// `Z''(0) = -speed/d` from the power series.
    pub fn series_second_derivative(&self) -> f64 {
        -2.0 * self.alpha()
    }

    /// `(Z, Z', Z'')` at `s in [0, s_max]`.
    pub fn eval(&self, s: f64) -> Result<(f64, f64, f64)> {
        if !(0.0..=self.s_max).contains(&s) {
            return Err(Error::OutOfRange { target: s, lo: 0.0, hi: self.s_max });
        }
        if s <= self.s_start {
            let (a, c) = (self.alpha(), self.c4());
            let s2 = s * s;
            return Ok((-a * s2 + c * s2 * s2, -2.0 * a * s + 4.0 * c * s2 * s, -2.0 * a + 12.0 * c * s2));
        }
        let (z, dz) = hermite(&self.traj, s, 0).expect("inside trajectory");
        let (_, ddz) = hermite(&self.traj, s, 1).expect("inside trajectory");
        Ok((z, dz, ddz))
    }

    pub fn z(&self, s: f64) -> Result<f64> {
        Ok(self.eval(s)?.0)
    }

    /// Second derivative at the origin from the integrated slope.
    pub fn numerical_second_derivative(&self) -> f64 {
        let h = 4.0 * self.s_start;
        let (_, dz) = hermite(&self.traj, h, 0).expect("inside trajectory");
        let (_, dz2) = hermite(&self.traj, 2.0 * h, 0).expect("inside trajectory");
        // Richardson on dz/s = Z''(0) + O(s^2)
        (4.0 * (dz / h) - dz2 / (2.0 * h)) / 3.0
    }

    /// `H - speed <nu, e_z>` divided by `<nu, e_z>`: the translator equation.
    pub fn translator_residual(&self, s: f64) -> Result<f64> {
        let (_, dz, ddz) = self.eval(s)?;
        let w = (1.0 + dz * dz).sqrt();
        let h = -(ddz / (w * w * w) + (self.d as f64 - 1.0) * dz / (s * w));
        Ok(h - self.speed / w)
    }

    pub fn samples(&self, ds: f64) -> Vec<[f64; 3]> {
        let n = (self.s_max / ds).round() as usize;
        (0..=n)
            .map(|i| {
                let s = self.s_max * i as f64 / n as f64;
                let (z, dz, _) = self.eval(s).expect("inside range");
                [s, z, dz]
            })
            .collect()
    }

    pub fn to_csv(&self, ds: f64) -> String {
        let mut out = String::from("s,z,dz\n");
        for [s, z, dz] in self.samples(ds) {
            out.push_str(&format!("{s:.12e},{z:.12e},{dz:.12e}\n"));
        }
        out
    }
}

/// Solves `Z''/(1+Z'^2) + (d-1) Z'/s + speed = 0` from the removable
/// singularity at `s = 0`.
pub fn bowl_solve(d: usize, speed: f64, s_max: f64) -> Result<BowlProfile> {
    ensure(d >= 2, || format!("bowl dimension d = {d} below 2"))?;
    ensure(speed.is_finite() && speed > 0.0, || format!("invalid bowl speed {speed}"))?;
    ensure(s_max.is_finite() && s_max > 0.0, || format!("invalid bowl range {s_max}"))?;
    let df = d as f64;
    let mut prof = BowlProfile {
        d,
        speed,
        s_max,
        s_start: 1e-3 * (1.0 / speed).min(1.0) * s_max.min(1.0),
        traj: Vec::new(),
    };
    let s0 = prof.s_start;
    let (z0, dz0, _) = prof.eval(s0)?;
    let rhs = move |s: f64, y: &[f64; 2]| {
        let dz = y[1];
        [dz, -(1.0 + dz * dz) * (speed + (df - 1.0) * dz / s)]
    };
    prof.traj = integrate(rhs, s0, [z0, dz0], s_max, Tolerance::new(1e-12), |_, _| false)?;
    Ok(prof)
}

/// Leaves of the shifted shrinker foliation.
#[derive(Debug, Clone)]
pub enum FoliationLeaf {
    /// `Gamma_a^eta`: compact shrinker shifted by `eta` along the long axes.
    Compact { profile: ShrinkerProfile, eta: f64 },
    /// `Gamma~_b^eta`: tail shrinker shifted by `eta`.
    Tail { profile: TailShrinkerProfile, eta: f64 },
    /// The cylinder `R^k x S^{n-k}`.
    Cylinder,
}

/// One signed sample of `H - <y, nu>/2` along a leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignSample {
    pub y1: f64,
    pub arc: f64,
    pub value: f64,
}

pub fn sign_report_csv(samples: &[SignSample]) -> String {
    let mut s = String::from("y1,arc,value,sign\n");
    for p in samples {
        let sign = if p.value > 0.0 {
            1
        } else if p.value < 0.0 {
            -1
        } else {
            0
        };
        s.push_str(&format!("{:.12e},{:.12e},{:.12e},{sign}\n", p.y1, p.arc, p.value));
    }
    s
}

/// Evaluates `H_Gamma - <y, nu>/2` at `count` deterministic samples with
/// `y1 >= y1_min`, using `H_Gamma = H_Sigma + (k-1) <e1, nu> / y1`.
pub fn foliation_divergence(
    leaf: &FoliationLeaf,
    sym: SymmetryClass,
    y1_min: f64,
    count: usize,
) -> Result<Vec<SignSample>> {
    ensure(count >= 2, || "need at least two samples".to_string())?;
    let d = sym.tip_dimension();
    let km1 = sym.k() as f64 - 1.0;
    let value = |g: LeafGeometry, eta: f64| {
        let y1 = g.x[0] + eta;
        let hg = g.h + km1 * g.nu[0] / y1;
        (y1, hg - 0.5 * (y1 * g.nu[0] + g.x[1] * g.nu[1]))
    };
    let check_eta = |eta: f64| -> Result<()> {
        ensure(eta > 0.0, || format!("shift eta = {eta} must be positive"))?;
        if y1_min < 2.0 * km1 / eta {
            return Err(Error::InvalidParameter(format!(
                "samples need y1 >= 2(k-1)/eta = {}",
                2.0 * km1 / eta
            )));
        }
        if y1_min < eta {
            return Err(Error::OutOfRange { target: y1_min, lo: eta, hi: f64::INFINITY });
        }
        Ok(())
    };
    let mut pts: Vec<(f64, f64, [f64; 2])> = Vec::with_capacity(count);
    match leaf {
        FoliationLeaf::Cylinder => {
            let u = sym.cylinder_radius();
            let df = d as f64;
            for i in 0..count {
                let y1 = y1_min + 10.0 * i as f64 / (count - 1) as f64;
                let g = LeafGeometry { x: [y1, u], nu: [0.0, 1.0], h: (df - 1.0) / u };
                let (_, v) = value(g, 0.0);
                pts.push((y1, v, g.x));
            }
        }
        FoliationLeaf::Compact { profile, eta } => {
            check_eta(*eta)?;
            if profile.d != d {
                return Err(Error::InvalidParameter(format!(
                    "leaf dimension {} does not match n+1-k = {d}",
                    profile.d
                )));
            }
            let y_lo = y1_min - eta;
            if y_lo >= profile.a {
                return Err(Error::OutOfRange { target: y1_min, lo: *eta, hi: profile.a + eta });
            }
            let half = count / 2;
            let ys = profile.y_switch();
            if y_lo < ys {
                for i in 0..half {
                    let y = y_lo + (ys - y_lo) * i as f64 / half as f64;
                    let g = profile.geometry_at(y)?;
                    let (y1, v) = value(g, *eta);
                    pts.push((y1, v, [y1, g.x[1]]));
                }
            }
            let us = profile.u_switch();
            let rest = count - pts.len();
            for i in 0..rest {
                let u = us * (rest - i) as f64 / rest as f64;
                let g = profile.tip_geometry_at(u);
                if g.x[0] < y_lo {
                    continue;
                }
                let (y1, v) = value(g, *eta);
                pts.push((y1, v, [y1, g.x[1]]));
            }
        }
        FoliationLeaf::Tail { profile, eta } => {
            check_eta(*eta)?;
            if profile.d != d {
                return Err(Error::InvalidParameter(format!(
                    "leaf dimension {} does not match n+1-k = {d}",
                    profile.d
                )));
            }
            let y_lo = y1_min - eta;
            if y_lo >= profile.r_max {
                return Err(Error::OutOfRange { target: y1_min, lo: *eta, hi: profile.r_max + eta });
            }
            for i in 0..count {
                let y = y_lo + (profile.r_max - y_lo) * i as f64 / (count - 1) as f64;
                let g = profile.geometry_at(y)?;
                let (y1, v) = value(g, *eta);
                pts.push((y1, v, [y1, g.x[1]]));
            }
        }
    }
    let mut arc = 0.0;
    let mut out = Vec::with_capacity(pts.len());
    for (i, (y1, v, p)) in pts.iter().enumerate() {
        if i > 0 {
            let q = pts[i - 1].2;
            arc += (p[0] - q[0]).hypot(p[1] - q[1]);
        }
        out.push(SignSample { y1: *y1, arc, value: *v });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_is_the_a_equals_radius_shrinker() {
        // the round sphere of radius sqrt(2d) solves the shrinker equation
        let d = 3;
        let r = (2.0 * d as f64).sqrt();
        let p = shrinker_shoot(r, d, 1e-11).unwrap();
        for y in [0.0, 0.5, 1.5, 2.2, 2.4] {
            let exact = (r * r - y * y).sqrt();
            assert!((p.u_at(y).unwrap() - exact).abs() < 1e-7, "y={y}");
        }
        let g = p.geometry_at(1.0).unwrap();
        assert!((g.h - (d as f64 / 2.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn compact_shrinker_basics() {
        let p = shrinker_shoot(10.0, 3, 1e-10).unwrap();
        // the neutral mode y^2 - 2 lifts u_a(0) slightly above the cylinder
        let cyl = 2.0;
        assert!(p.u0() > cyl && p.u0() < 1.01 * cyl, "u0 = {}", p.u0());
        let far = shrinker_shoot(40.0, 3, 1e-10).unwrap();
        assert!(far.u0() - cyl < 0.1 * (p.u0() - cyl));
        assert_eq!(p.geometry_at(10.0).unwrap().x[1], 0.0);
        assert!(shrinker_shoot(1.5, 3, 1e-9).is_err());
    }

    #[test]
    fn bowl_series_and_slope() {
        let b = bowl_solve(3, std::f64::consts::FRAC_1_SQRT_2, 50.0).unwrap();
        let (z, dz, _) = b.eval(0.0).unwrap();
        assert_eq!((z, dz), (0.0, 0.0));
        let expect = -std::f64::consts::SQRT_2 / 6.0;
        assert!((b.series_second_derivative() - expect).abs() < 1e-15);
        assert!((b.numerical_second_derivative() - expect).abs() < 1e-6);
        let (_, dz, _) = b.eval(50.0).unwrap();
        let asym = -std::f64::consts::FRAC_1_SQRT_2 / 2.0;
        assert!((dz / 50.0 / asym - 1.0).abs() < 0.03);
    }

    #[test]
    fn cylinder_leaf_vanishes() {
        let sym = SymmetryClass::new(4, 2).unwrap();
        let v = foliation_divergence(&FoliationLeaf::Cylinder, sym, 2.0, 20).unwrap();
        assert!(v.iter().all(|s| s.value.abs() < 1e-14));
    }
}
