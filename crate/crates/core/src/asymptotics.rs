//! Comparison of renormalized profiles with the parabolic, intermediate and tip
//! asymptotics, and monitors for the a-priori estimates along a run.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::radial_flow::{curve_velocity, zoom_tip, ProfileSamples, TipZoom};
use crate::soliton_atlas::{bowl_solve, BowlProfile};
use crate::SymmetryClass;

/// Speed of the bowl that models the tip in the renormalized frame.
pub const BOWL_SPEED: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A renormalized graph profile `u(rho)` at time `tau`.
pub trait ProfileView {
    fn sym(&self) -> SymmetryClass;
    fn tau(&self) -> f64;
    fn u(&self, rho: f64) -> f64;
    /// Largest `rho` at which `u` may be evaluated.
    fn rho_extent(&self) -> f64;
}

impl ProfileView for ProfileSamples {
    fn sym(&self) -> SymmetryClass {
        self.sym
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn u(&self, rho: f64) -> f64 {
        self.u_at(rho)
    }

    fn rho_extent(&self) -> f64 {
        self.graph_extent()
    }
}

/// Profile given by a closure, for feeding exact formulas to the verifier.
pub struct FnProfile<F: Fn(f64) -> f64> {
    pub sym: SymmetryClass,
    pub tau: f64,
    pub extent: f64,
    pub f: F,
}

impl<F: Fn(f64) -> f64> ProfileView for FnProfile<F> {
    fn sym(&self) -> SymmetryClass {
        self.sym
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn u(&self, rho: f64) -> f64 {
        (self.f)(rho)
    }

    fn rho_extent(&self) -> f64 {
        self.extent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Parabolic,
    Intermediate,
    Tip,
    Width,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Parabolic => "parabolic",
            Region::Intermediate => "intermediate",
            Region::Tip => "tip",
            Region::Width => "width",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spatial windows of the region checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionParams {
    /// Parabolic window `rho <= m`.
    pub m: f64,
    /// Intermediate window `sigma in [0, sigma_max]`.
    pub sigma_max: f64,
    /// Tip window `s <= s_max`.
    pub s_max: f64,
    /// Sampling step used for every sup-norm.
    pub step: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self { m: 3.0, sigma_max: 1.0, s_max: 5.0, step: 0.02 }
    }
}

/// Deviation of one snapshot from the prediction of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPoint {
    pub tau: f64,
    pub deviation: f64,
    /// Parabolic: fitted coefficient of `(rho^2 - 2k)/(4|tau|)` in units of
    /// the cylinder radius. Width: `d/sqrt(2|tau|)` and `H/sqrt(2|tau|)`.
    pub coefficients: Vec<f64>,
    /// Width region only: `|H/sqrt(2|tau|) - 1/2|`.
    pub secondary: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub region: Region,
    pub points: Vec<WindowPoint>,
    /// `(x, measured, predicted)` at the latest window point.
    pub series: Vec<[f64; 3]>,
}

impl RegionReport {
    pub fn latest(&self) -> &WindowPoint {
        self.points.last().expect("reports hold at least one window point")
    }

    pub fn deviations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.deviation).collect()
    }

    /// True if the deviation does not grow from one window point to the next.
    pub fn is_improving(&self) -> bool {
        self.points.windows(2).all(|w| w[1].deviation <= w[0].deviation)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,measured,predicted\n");
        for [x, m, p] in &self.series {
            let _ = writeln!(s, "{x:.12e},{m:.12e},{p:.12e}");
        }
        s
    }

    pub fn window_csv(&self) -> String {
        let mut s = String::from("tau,deviation,coefficients,secondary\n");
        for p in &self.points {
            let c: Vec<String> = p.coefficients.iter().map(|v| format!("{v:.9e}")).collect();
            let sec = p.secondary.map(|v| format!("{v:.9e}")).unwrap_or_default();
            let _ = writeln!(s, "{:.9e},{:.9e},{},{}", p.tau, p.deviation, c.join(";"), sec);
        }
        s
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn nonempty<T>(v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Coverage("empty window".into()))
    } else {
        Ok(())
    }
}

/// `sqrt(2(n-k)) (1 - (rho^2 - 2k)/(4|tau|))`.
pub fn parabolic_prediction(sym: SymmetryClass, tau: f64, rho: f64) -> f64 {
    sym.cylinder_radius() * (1.0 - (rho * rho - 2.0 * sym.k() as f64) / (4.0 * tau.abs()))
}

/// `sqrt((n-k)(2 - sigma^2))`.
pub fn intermediate_prediction(sym: SymmetryClass, sigma: f64) -> f64 {
    (sym.fiber() as f64 * (2.0 - sigma * sigma)).max(0.0).sqrt()
}

/// Parabolic region: `sup_{rho <= M} |tau| |u - prediction|` and the least
/// squares coefficient of `(rho^2 - 2k)` in `u = A + B (rho^2 - 2k)`.
pub fn verify_parabolic(profiles: &[&dyn ProfileView], params: &RegionParams) -> Result<RegionReport> {
    nonempty(profiles)?;
    let mut points = Vec::new();
    let mut series = Vec::new();
    for p in profiles {
        if p.rho_extent() < params.m {
            return Err(Error::Coverage(format!(
                "graph chart reaches rho = {:.3}, parabolic window needs {}",
                p.rho_extent(),
                params.m
            )));
        }
        let sym = p.sym();
        let tau = p.tau();
        let k2 = 2.0 * sym.k() as f64;
        let rhos = grid(0.0, params.m, params.step);
        let mut dev: f64 = 0.0;
        let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        series.clear();
        for &r in &rhos {
            let u = p.u(r);
            let pred = parabolic_prediction(sym, tau, r);
            dev = dev.max(tau.abs() * (u - pred).abs());
            let x = r * r - k2;
            sx += x;
            sxx += x * x;
            sy += u;
            sxy += x * u;
            series.push([r, u, pred]);
        }
        let nf = rhos.len() as f64;
        let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
        let coeff = slope / (-sym.cylinder_radius() / (4.0 * tau.abs()));
        points.push(WindowPoint { tau, deviation: dev, coefficients: vec![coeff], secondary: None });
    }
    Ok(RegionReport { region: Region::Parabolic, points, series })
}

/// Intermediate region: `sup_{sigma in [0, sigma_max]} |u(sigma sqrt|tau|) - ellipse|`.
pub fn verify_intermediate(profiles: &[&dyn ProfileView], params: &RegionParams) -> Result<RegionReport> {
    nonempty(profiles)?;
    let mut points = Vec::new();
    let mut series = Vec::new();
    for p in profiles {
        let sym = p.sym();
        let tau = p.tau();
        let scale = tau.abs().sqrt();
        if p.rho_extent() < params.sigma_max * scale {
            return Err(Error::Coverage(format!(
                "graph chart reaches sigma = {:.3}, intermediate window needs {}",
                p.rho_extent() / scale,
                params.sigma_max
            )));
        }
        let mut dev: f64 = 0.0;
        series.clear();
        for s in grid(0.0, params.sigma_max, params.step) {
            let u = p.u(s * scale);
            let pred = intermediate_prediction(sym, s);
            dev = dev.max((u - pred).abs());
            series.push([s, u, pred]);
        }
        points.push(WindowPoint { tau, deviation: dev, coefficients: Vec::new(), secondary: None });
    }
    Ok(RegionReport { region: Region::Intermediate, points, series })
}

/// Tip region: `sup_{s <= s_max} |Z - Z_bowl|`.
pub fn verify_tip(zooms: &[TipZoom], bowl: &BowlProfile, params: &RegionParams) -> Result<RegionReport> {
    nonempty(zooms)?;
    if bowl.s_max < params.s_max {
        return Err(Error::Coverage(format!("bowl solved up to {}, need {}", bowl.s_max, params.s_max)));
    }
    let mut points = Vec::new();
    let mut series = Vec::new();
    for z in zooms {
        let s_end = *z.s.last().expect("zoom has samples");
        if s_end + 1e-12 < params.s_max {
            return Err(Error::Coverage(format!("tip zoom reaches s = {s_end}, need {}", params.s_max)));
        }
        let mut dev: f64 = 0.0;
        series.clear();
        for (s, zv) in z.s.iter().zip(&z.z) {
            if *s > params.s_max + 1e-12 {
                break;
            }
            let zb = bowl.z(*s)?;
            dev = dev.max((zv - zb).abs());
            series.push([*s, *zv, zb]);
        }
        points.push(WindowPoint { tau: z.tau, deviation: dev, coefficients: Vec::new(), secondary: None });
    }
    Ok(RegionReport { region: Region::Tip, points, series })
}

/// Renormalized tip position and tip mean curvature at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthSample {
    pub tau: f64,
    pub tip: f64,
    pub tip_curvature: f64,
}

impl From<&ProfileSamples> for WidthSample {
    fn from(p: &ProfileSamples) -> Self {
        Self { tau: p.tau, tip: p.tip(), tip_curvature: p.tip_curvature() }
    }
}

/// Width region: `|d / sqrt(2|tau|) - 1|` with `|H / sqrt(2|tau|) - 1/2|` as
/// the secondary deviation. In renormalized variables these are the
/// statements `d(t) ~ sqrt(2|t| log|t|)` and `H(p_t) ~ sqrt(log|t| / (2|t|))`.
pub fn verify_width(samples: &[WidthSample]) -> Result<RegionReport> {
    nonempty(samples)?;
    let mut points = Vec::new();
    let mut series = Vec::new();
    for w in samples {
        let scale = (2.0 * w.tau.abs()).sqrt();
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter("width check needs tau != 0".into()));
        }
        let d_ratio = w.tip / scale;
        let h_ratio = w.tip_curvature / scale;
        points.push(WindowPoint {
            tau: w.tau,
            deviation: (d_ratio - 1.0).abs(),
            coefficients: vec![d_ratio, h_ratio],
            secondary: Some((h_ratio - 0.5).abs()),
        });
        series.push([w.tau, d_ratio, 1.0]);
    }
    Ok(RegionReport { region: Region::Width, points, series })
}

/// Runs the check of `region` on renormalized snapshots of a radial run.
pub fn verify_region(samples: &[ProfileSamples], region: Region, params: &RegionParams) -> Result<RegionReport> {
    nonempty(samples)?;
    match region {
        Region::Parabolic => {
            let v: Vec<&dyn ProfileView> = samples.iter().map(|p| p as &dyn ProfileView).collect();
            verify_parabolic(&v, params)
        }
        Region::Intermediate => {
            let v: Vec<&dyn ProfileView> = samples.iter().map(|p| p as &dyn ProfileView).collect();
            verify_intermediate(&v, params)
        }
        Region::Tip => {
            let zooms = samples
                .iter()
                .map(|p| zoom_tip(p, params.s_max, params.step))
                .collect::<Result<Vec<_>>>()?;
            let bowl = bowl_solve(samples[0].sym.tip_dimension(), BOWL_SPEED, params.s_max + 1.0)?;
            verify_tip(&zooms, &bowl, params)
        }
        Region::Width => {
            let w: Vec<WidthSample> = samples.iter().map(WidthSample::from).collect();
            verify_width(&w)
        }
    }
}

/// Constants of the estimate monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorParams {
    pub l: f64,
    pub theta: f64,
    /// Width of the centred difference stencils.
    pub stencil: f64,
}

impl MonitorParams {
    pub fn defaults(sym: SymmetryClass) -> Self {
        Self { l: 10.0, theta: 0.3 * sym.cylinder_radius(), stencil: 0.05 }
    }
}

/// Monitors at one time; `None` marks an empty evaluation domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorPoint {
    pub tau: f64,
    /// `max (u^2)_{rho rho}` over the graph chart.
    pub quadratic_concavity: Option<f64>,
    /// `max |u_rho| + u |u_{rho rho}|` over `{u >= L / sqrt|tau|}`.
    pub cylindrical: Option<f64>,
    /// `max |1 + u Y / (2 (n-k) Y_u)|` over `{L/sqrt|tau| <= u <= 2 theta}`.
    pub collar: Option<f64>,
    /// The collar quantity at `u = 2 theta` alone.
    pub collar_edge: Option<f64>,
    /// `min (lambda_1 + ... + lambda_{k+1}) / H` over interior nodes.
    pub convexity_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSeries {
    pub params: MonitorParams,
    pub points: Vec<MonitorPoint>,
}

impl MonitorSeries {
    fn fold(&self, f: impl Fn(&MonitorPoint) -> Option<f64>) -> Option<f64> {
        self.points.iter().filter_map(f).reduce(f64::max)
    }

    pub fn max_quadratic_concavity(&self) -> Option<f64> {
        self.fold(|p| p.quadratic_concavity)
    }

    pub fn max_collar(&self) -> Option<f64> {
        self.fold(|p| p.collar)
    }

    pub fn max_collar_edge(&self) -> Option<f64> {
        self.fold(|p| p.collar_edge)
    }

    pub fn max_cylindrical(&self) -> Option<f64> {
        self.fold(|p| p.cylindrical)
    }

    pub fn min_convexity_ratio(&self) -> f64 {
        self.points.iter().map(|p| p.convexity_ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
        let mut s = format!(
            "# L={} theta={} stencil={}\ntau,quadratic_concavity,cylindrical,collar,collar_edge,convexity_ratio\n",
            self.params.l, self.params.theta, self.params.stencil
        );
        for p in &self.points {
            let _ = writeln!(
                s,
                "{:.9e},{},{},{},{},{:.9e}",
                p.tau,
                o(p.quadratic_concavity),
                o(p.cylindrical),
                o(p.collar),
                o(p.collar_edge),
                p.convexity_ratio
            );
        }
        s
    }
}

/// Second centred difference of `f` at `x` with even reflection at 0.
fn second_difference(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let left = f((x - h).abs());
    (f(x + h) - 2.0 * f(x) + left) / (h * h)
}

fn quadratic_concavity(p: &dyn ProfileView, h: f64) -> Option<f64> {
    let hi = p.rho_extent() - h;
    if hi <= 0.0 {
        return None;
    }
    let u2 = |r: f64| p.u(r).powi(2);
    grid(0.0, hi, h).into_iter().map(|r| second_difference(&u2, r, h)).reduce(f64::max)
}

fn cylindrical(p: &dyn ProfileView, level: f64, h: f64) -> Option<f64> {
    let hi = p.rho_extent() - h;
    let u = |r: f64| p.u(r);
    grid(0.0, hi.max(0.0), h)
        .into_iter()
        .filter(|r| p.u(*r) >= level)
        .map(|r| {
            let ur = (u(r + h) - u((r - h).abs())) / (2.0 * h);
            ur.abs() + u(r) * second_difference(&u, r, h).abs()
        })
        .reduce(f64::max)
}

/// `|1 + u Y / (2 (n-k) Y_u)|`, from the inverse chart where it reaches and
/// from the graph chart (`Y_u = 1 / u_rho`) above it.
fn collar_quantity(p: &ProfileSamples, u: f64, h: f64) -> f64 {
    let f = p.sym.fiber() as f64;
    let (y, yu) = if u + h <= p.inverse_extent() {
        let lo = (u - h).max(0.0);
        (p.y_at(u), (p.y_at(u + h) - p.y_at(lo)) / (u + h - lo))
    } else {
        let r = p.rho_at_level(u);
        (r, 1.0 / p.u_rho_at(r))
    };
    (1.0 + u * y / (2.0 * f * yu)).abs()
}

fn convexity_ratio(p: &ProfileSamples) -> Result<f64> {
    let c = p.curve();
    let kin = curve_velocity(c)?;
    let sym = p.sym;
    let (n, k) = (sym.n(), sym.k());
    let nodes = c.nodes();
    let mut worst = f64::INFINITY;
    for i in 1..nodes.len() - 1 {
        let [r, y] = nodes[i];
        let nu = kin.normal[i];
        let mut lam = vec![kin.curvature[i]];
        lam.extend(std::iter::repeat(nu[0] / r).take(k - 1));
        lam.extend(std::iter::repeat(nu[1] / y).take(n - k));
        let h: f64 = lam.iter().sum();
        lam.sort_by(|a, b| a.total_cmp(b));
        let partial: f64 = lam[..(k + 1).min(n)].iter().sum();
        worst = worst.min(partial / h);
    }
    Ok(worst)
}

/// Evaluates the estimate monitors on every snapshot.
pub fn monitor_estimates(samples: &[ProfileSamples], params: &MonitorParams) -> Result<MonitorSeries> {
    nonempty(samples)?;
    if !(params.l > 0.0 && params.theta > 0.0 && params.stencil > 0.0) {
        return Err(Error::InvalidParameter(format!("bad monitor parameters {params:?}")));
    }
    let h = params.stencil;
    let mut points = Vec::with_capacity(samples.len());
    for p in samples {
        let level = params.l / p.tau.abs().sqrt();
        let edge = 2.0 * params.theta;
        let top = p.u_at(0.0);
        let collar = (level < edge && edge < top).then(|| {
            grid(level, edge, h).into_iter().map(|u| collar_quantity(p, u, h)).fold(f64::NEG_INFINITY, f64::max)
        });
        let collar_edge = (edge < top).then(|| collar_quantity(p, edge, h));
        points.push(MonitorPoint {
            tau: p.tau,
            quadratic_concavity: quadratic_concavity(p, h),
            cylindrical: cylindrical(p, level, h),
            collar,
            collar_edge,
            convexity_ratio: convexity_ratio(p)?,
        });
    }
    Ok(MonitorSeries { params: *params, points })
}

/// Monitors for a bare graph profile (no tip chart): concavity and cylindrical estimate.
pub fn monitor_graph(p: &dyn ProfileView, params: &MonitorParams) -> (Option<f64>, Option<f64>) {
    let level = params.l / p.tau().abs().sqrt();
    (quadratic_concavity(p, params.stencil), cylindrical(p, level, params.stencil))
}
