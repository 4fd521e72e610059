use crate::error::{Error, Result};
use crate::radial_flow::fit_extinction;

use super::surface::RadialSurface;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] * b[0] + a[1] * b[1]) + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn comb(c: &[(f64, [f64; 3])]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (w, v) in c {
        for k in 0..3 {
            out[k] += w * v[k];
        }
    }
    out
}

fn d1(f: impl Fn(isize) -> f64, h: f64) -> f64 {
    ((f(1) - f(-1)) * 8.0 - (f(2) - f(-2))) / (12.0 * h)
}

fn d2(f: impl Fn(isize) -> f64, h: f64) -> f64 {
    (((f(1) + f(-1)) * 16.0 - (f(2) + f(-2))) - 30.0 * f(0)) / (12.0 * h * h)
}

/// Local geometry of the quotient surface at one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub x: [f64; 3],
    /// Outward unit normal.
    pub normal: [f64; 3],
    /// Mean curvature of the quotient surface (positive on convex surfaces).
    pub h_sigma: f64,
    /// Principal curvatures of the quotient surface, ascending.
    pub kappa: [f64; 2],
    /// Fiber curvature `<e3, nu> / x3`.
    pub fiber: f64,
    /// Inward normal speed `H_Sigma + (n - 2) * fiber`.
    pub speed: f64,
    /// Area element `|X_theta x X_phi|`.
    pub area: f64,
    /// `<D s, nu>`, positive while the surface is star-shaped.
    pub support: f64,
    /// Inverse metric `(g^11, g^12, g^22)`.
    pub ginv: [f64; 3],
}

impl CellGeometry {
    /// Sum of the three smallest principal curvatures of the hypersurface over its mean curvature.
    pub fn three_convexity(&self, n: usize) -> f64 {
        let mut all: Vec<f64> = vec![self.kappa[0], self.kappa[1]];
        all.extend(std::iter::repeat(self.fiber).take(n - 2));
        all.sort_by(|a, b| a.total_cmp(b));
        let m = all.len().min(3);
        all[..m].iter().sum::<f64>() / self.speed
    }
}

/// Evaluate the cell geometry at `(i, j)` using even ghost values across all edges.
pub(crate) fn cell_geometry(s: &RadialSurface, i: usize, j: usize) -> Result<CellGeometry> {
    let g = &s.grid;
    let n = g.n;
    let h = g.h;
    let reflect = |a: isize| -> usize {
        let m = n as isize;
        (if a < 0 { -1 - a } else if a >= m { 2 * m - 1 - a } else { a }) as usize
    };
    let r = |a: isize, b: isize| s.r[reflect(b) * n + reflect(a)];
    let (ii, jj) = (i as isize, j as isize);
    let r0 = r(ii, jj);
    // Fourth-order centred differences; the even extension is smooth across every edge.
    let rt = d1(|o| r(ii + o, jj), h);
    let rp = d1(|o| r(ii, jj + o), h);
    let rtt = d2(|o| r(ii + o, jj), h);
    let rpp = d2(|o| r(ii, jj + o), h);
    let rtp = d1(|o| d1(|q| r(ii + o, jj + q), h), h);

    let a = s.axes();
    let (st, ct, sp, cp) = (g.st[i], g.ct[i], g.sp[j], g.cp[j]);
    let e = [a[0] * (sp * ct), a[1] * (sp * st), a[2] * cp];
    let et = [-(a[0] * (sp * st)), a[1] * (sp * ct), 0.0];
    let ep = [a[0] * (cp * ct), a[1] * (cp * st), -(a[2] * sp)];
    let ett = [-(a[0] * (sp * ct)), -(a[1] * (sp * st)), 0.0];
    let epp = [-(a[0] * (sp * ct)), -(a[1] * (sp * st)), -(a[2] * cp)];
    let etp = [-(a[0] * (cp * st)), a[1] * (cp * ct), 0.0];

    let x = comb(&[(r0, e)]);
    let xt = comb(&[(rt, e), (r0, et)]);
    let xp = comb(&[(rp, e), (r0, ep)]);
    let xtt = comb(&[(rtt, e), (2.0 * rt, et), (r0, ett)]);
    let xpp = comb(&[(rpp, e), (2.0 * rp, ep), (r0, epp)]);
    let xtp = comb(&[(rtp, e), (rt, ep), (rp, et), (r0, etp)]);

    let g11 = dot(xt, xt);
    let g12 = dot(xt, xp);
    let g22 = dot(xp, xp);
    let det = g11 * g22 - g12 * g12;
    let nv = cross(xp, xt);
    let area = dot(nv, nv).sqrt();
    let scale = dot(x, x).max(1e-300);
    if !(det > 1e-26 * scale * scale) || !area.is_finite() {
        return Err(Error::DegenerateGeometry(format!("singular metric at cell ({i}, {j})")));
    }
    let nu = [nv[0] / area, nv[1] / area, nv[2] / area];
    let support = dot(e, nu);
    if !(support > 0.0) {
        return Err(Error::DegenerateGeometry(format!("surface not star-shaped at cell ({i}, {j})")));
    }
    let ginv = [g22 / det, -g12 / det, g11 / det];
    let h11 = -dot(xtt, nu);
    let h12 = -dot(xtp, nu);
    let h22 = -dot(xpp, nu);
    let h_sigma = (ginv[0] * h11 + 2.0 * ginv[1] * h12) + ginv[2] * h22;
    // Shape operator eigenvalues: det(h - k g) = 0.
    let gauss = (h11 * h22 - h12 * h12) / det;
    let disc = (0.25 * h_sigma * h_sigma - gauss).max(0.0).sqrt();
    let kappa = [0.5 * h_sigma - disc, 0.5 * h_sigma + disc];
    let fiber = nu[2] / x[2];
    let speed = h_sigma + (s.sym().n() as f64 - 2.0) * fiber;
    if !speed.is_finite() {
        return Err(Error::NonFinite(format!("speed at cell ({i}, {j})")));
    }
    Ok(CellGeometry { x, normal: nu, h_sigma, kappa, fiber, speed, area, support, ginv })
}

/// Time step controls for the anisotropic solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoStepPolicy {
    pub c_cfl: f64,
    pub max_rejections: usize,
}

impl Default for AnisoStepPolicy {
    fn default() -> Self {
        Self { c_cfl: 0.2, max_rejections: 40 }
    }
}

const FOURTH_ORDER_RADIUS: f64 = 4.0 / 3.0;

struct Eval {
    rate: Vec<f64>,
    sigma: Vec<f64>,
    stiff: f64,
    area: f64,
}

fn evaluate(s: &RadialSurface) -> Result<Eval> {
    let n = s.grid_size();
    let g = &s.grid;
    let fiber_mult = s.sym().n() as f64 - 1.0;
    let mut rate = vec![0.0; n * n];
    let mut sigma = vec![0.0; n * n];
    let mut stiff: f64 = 0.0;
    let mut area = 0.0;
    for j in 0..n {
        let mut ring = 0.0;
        for i in 0..n {
            let c = cell_geometry(s, i, j)?;
            rate[j * n + i] = -c.speed / c.support;
            // 4/3 matches the spectral radius of the fourth-order stencil.
            sigma[j * n + i] = FOURTH_ORDER_RADIUS * c.ginv[0];
            stiff = stiff.max(FOURTH_ORDER_RADIUS * (fiber_mult * c.ginv[2] + 2.0 * c.ginv[1].abs()));
            ring += c.area;
        }
        area += g.w_area[j] * ring / g.sp[j];
    }
    Ok(Eval { rate, sigma, stiff, area: 4.0 * g.h * area })
}

/// Solve `(I - dt sigma delta_theta^2) u = rhs` on every ring with reflecting ends.
fn ring_solve(n: usize, h: f64, dt: f64, sigma: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.resize(n, 0.0);
    for j in 0..n {
        let row = &mut rhs[j * n..(j + 1) * n];
        let sg = &sigma[j * n..(j + 1) * n];
        let c = |i: usize| dt * sg[i] / (h * h);
        // Thomas algorithm; the reflecting ends fold the ghost into the diagonal.
        let mut prev_c = 0.0;
        let mut prev_d = 0.0;
        for i in 0..n {
            let ci = c(i);
            let lower = if i > 0 { -ci } else { 0.0 };
            let upper = if i + 1 < n { -ci } else { 0.0 };
            let diag = 1.0 + ci * (if i == 0 || i + 1 == n { 1.0 } else { 2.0 });
            let denom = diag - lower * prev_c;
            let cc = upper / denom;
            let dd = (row[i] - lower * prev_d) / denom;
            scratch[i] = cc;
            row[i] = dd;
            prev_c = cc;
            prev_d = dd;
        }
        for i in (0..n - 1).rev() {
            row[i] -= scratch[i] * row[i + 1];
        }
    }
}

fn theta_second_difference(n: usize, h: f64, r: &[f64], j: usize, i: usize) -> f64 {
    let row = &r[j * n..(j + 1) * n];
    let left = row[i.saturating_sub(1)];
    let right = row[(i + 1).min(n - 1)];
    ((right + left) - 2.0 * row[i]) / (h * h)
}

/// Explicit step size from the phi-direction and mixed stiffness.
pub fn aniso_dt(s: &RadialSurface, policy: &AnisoStepPolicy) -> Result<f64> {
    let ev = evaluate(s)?;
    Ok(policy.c_cfl * s.grid.h * s.grid.h / ev.stiff)
}

/// One Heun step in which the theta-diffusion is stabilized implicitly ring by ring,
/// which removes the pole restriction on the step size.
pub fn step_aniso(
    s: &RadialSurface,
    policy: &AnisoStepPolicy,
    dt_max: Option<f64>,
) -> Result<(RadialSurface, f64, usize)> {
    step_from(s, &evaluate(s)?, policy, dt_max)
}

fn step_from(
    s: &RadialSurface,
    ev0: &Eval,
    policy: &AnisoStepPolicy,
    dt_max: Option<f64>,
) -> Result<(RadialSurface, f64, usize)> {
    let n = s.grid_size();
    let h = s.grid.h;
    let mut dt = policy.c_cfl * h * h / ev0.stiff;
    if let Some(m) = dt_max {
        dt = dt.min(m);
    }
    let mut reason = String::new();
    for rejected in 0..=policy.max_rejections {
        let attempt = || -> Result<RadialSurface> {
            let stab0: Vec<f64> = (0..n * n)
                .map(|p| ev0.sigma[p] * theta_second_difference(n, h, &s.r, p / n, p % n))
                .collect();
            let mut rhs: Vec<f64> =
                (0..n * n).map(|p| s.r[p] + dt * (ev0.rate[p] - stab0[p])).collect();
            let mut sc = Vec::new();
            ring_solve(n, h, dt, &ev0.sigma, &mut rhs, &mut sc);
            let mut s1 = s.clone();
            s1.r = rhs;
            check_radii(&s1)?;
            let ev1 = evaluate(&s1)?;
            let mut rhs2: Vec<f64> = (0..n * n)
                .map(|p| s.r[p] + dt * (0.5 * (ev0.rate[p] + ev1.rate[p]) - stab0[p]))
                .collect();
            ring_solve(n, h, dt, &ev0.sigma, &mut rhs2, &mut sc);
            let mut s2 = s.clone();
            s2.r = rhs2;
            s2.set_t(s.t() + dt);
            check_radii(&s2)?;
            Ok(s2)
        };
        match attempt() {
            Ok(next) => return Ok((next, dt, rejected)),
            Err(e) => {
                reason = e.to_string();
                dt *= 0.5;
            }
        }
    }
    Err(Error::StepRejected { attempts: policy.max_rejections + 1, t: s.t(), reason })
}

fn check_radii(s: &RadialSurface) -> Result<()> {
    if s.r.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::DegenerateGeometry("radius left the admissible range".into()))
    }
}

/// Area of the quotient surface `Sigma` over all four reflected quarters.
pub fn surface_area(s: &RadialSurface) -> Result<f64> {
    Ok(evaluate(s)?.area)
}

/// Smallest sampled 3-convexity ratio and whether the second fundamental form
/// stayed positive definite on every cell.
pub fn convexity_monitor(s: &RadialSurface) -> Result<(f64, bool)> {
    let n = s.grid_size();
    let dim = s.sym().n();
    let mut worst = f64::INFINITY;
    let mut convex = true;
    for j in 0..n {
        for i in 0..n {
            let c = cell_geometry(s, i, j)?;
            worst = worst.min(c.three_convexity(dim));
            convex &= c.kappa[0] > 0.0;
        }
    }
    Ok((worst, convex))
}

/// Stop rule for [`run_aniso`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once the quotient area falls below this fraction of its initial value.
    AreaRatio(f64),
    /// Stop at the given time.
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoConfig {
    pub step: AnisoStepPolicy,
    pub stop: StopRule,
    /// Snapshots are stored each time the area shrinks by this factor.
    pub snapshot_factor: f64,
    pub max_steps: usize,
    pub fit_points: usize,
    /// Convexity and 3-convexity are monitored once the area has dropped below
    /// this fraction of its initial value.
    pub transient_area_ratio: f64,
}

impl Default for AnisoConfig {
    fn default() -> Self {
        Self {
            step: AnisoStepPolicy::default(),
            stop: StopRule::AreaRatio(1e-3),
            snapshot_factor: 0.9,
            max_steps: 20_000_000,
            fit_points: 8,
            transient_area_ratio: 0.8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnisoTrajectory {
    pub snapshots: Vec<RadialSurface>,
    pub areas: Vec<f64>,
    /// Extrapolated extinction time; `None` for fixed-time runs.
    pub t_ext: Option<f64>,
    pub t_ext_err: f64,
    pub steps: usize,
    pub rejections: usize,
    /// Smallest 3-convexity ratio seen after transients.
    pub min_three_convexity: f64,
    pub convexity_lost: bool,
    pub config: AnisoConfig,
}

impl AnisoTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t()).collect()
    }

    pub fn last(&self) -> &RadialSurface {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }
}

/// Flow the quotient surface until the stop rule fires.
pub fn run_aniso(initial: &RadialSurface, cfg: &AnisoConfig) -> Result<AnisoTrajectory> {
    let mut ev = evaluate(initial)?;
    let a0 = ev.area;
    let mut s = initial.clone();
    let mut snapshots = vec![s.clone()];
    let mut areas = vec![a0];
    let mut next_snap = a0 * cfg.snapshot_factor;
    let mut steps = 0;
    let mut rejections = 0;
    let mut min3 = f64::INFINITY;
    let mut lost = false;
    loop {
        let dt_max = match cfg.stop {
            StopRule::Time(t_end) => {
                if s.t() >= t_end {
                    break;
                }
                Some(t_end - s.t())
            }
            StopRule::AreaRatio(_) => None,
        };
        if steps >= cfg.max_steps {
            return Err(Error::StepBudget(cfg.max_steps));
        }
        let (next, _dt, rej) = step_from(&s, &ev, &cfg.step, dt_max)?;
        steps += 1;
        rejections += rej;
        s = next;
        ev = evaluate(&s)?;
        let area = ev.area;
        let done = match cfg.stop {
            StopRule::AreaRatio(q) => area <= q * a0,
            StopRule::Time(t_end) => s.t() >= t_end,
        };
        if area <= next_snap || done {
            if area <= cfg.transient_area_ratio * a0 {
                let (m3, convex) = convexity_monitor(&s)?;
                min3 = min3.min(m3);
                lost |= !convex;
            }
            snapshots.push(s.clone());
            areas.push(area);
            while next_snap >= area {
                next_snap *= cfg.snapshot_factor;
            }
        }
        if done {
            break;
        }
    }
    let (t_ext, t_ext_err) = match cfg.stop {
        StopRule::AreaRatio(_) => {
            let m = cfg.fit_points.min(areas.len());
            let ts: Vec<f64> = snapshots[snapshots.len() - m..].iter().map(|c| c.t()).collect();
            let (t, e) = fit_extinction(&ts, &areas[areas.len() - m..])?;
            (Some(t), e)
        }
        StopRule::Time(_) => (None, 0.0),
    };
    Ok(AnisoTrajectory {
        snapshots,
        areas,
        t_ext,
        t_ext_err,
        steps,
        rejections,
        min_three_convexity: min3,
        convexity_lost: lost,
        config: *cfg,
    })
}
