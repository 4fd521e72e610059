use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::spectral_ou::{project_truncated, Projection, SpectralFrame};
use crate::symmetry::SymmetryClass;

use super::curve::{cross, dist, sub, Frame, QuotientCurve};
use super::run::Trajectory;

/// How renormalized time is attached to a forward run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauCalibration {
    /// `tau = -log(t_ext - t)`.
    Literal,
    /// Shifts the literal time so that the initial quarter ellipse of scale
    /// `ell` sits at the ancient time `-(n-k) k^2 ell^2`, where its profile
    /// coincides with the intermediate-region ellipse.
    Ellipsoid { ell: f64 },
}

impl TauCalibration {
    pub fn offset(&self, sym: SymmetryClass, t_ext: f64) -> f64 {
        match *self {
            TauCalibration::Literal => 0.0,
            TauCalibration::Ellipsoid { ell } => t_ext.ln() - ellipsoid_tau(ell, sym),
        }
    }
}

/// `|tau|` at which the quarter ellipse of scale `ell` matches the
/// intermediate-region ellipse.
pub fn ellipsoid_tau(ell: f64, sym: SymmetryClass) -> f64 {
    let k = sym.k() as f64;
    sym.fiber() as f64 * k * k * ell * ell
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartOptions {
    /// Grid step of the resampled graph chart.
    pub drho: f64,
    /// Slope bound separating the graph chart from the inverse chart.
    pub max_slope: f64,
    /// Number of intervals of the resampled inverse chart.
    pub inverse_samples: usize,
    /// Snapshots with `t_ext - t` below this multiple of the extinction-time
    /// uncertainty are dropped.
    pub min_t_prime_factor: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self { drho: 0.02, max_slope: 10.0, inverse_samples: 400, min_t_prime_factor: 20.0 }
    }
}

/// Renormalized snapshot with its graph chart `u(rho)` and inverse chart `Y(u)`.
#[derive(Debug, Clone)]
pub struct ProfileSamples {
    pub sym: SymmetryClass,
    /// Renormalized time after calibration.
    pub tau: f64,
    /// `-log(t_ext - t)`.
    pub tau_run: f64,
    /// Unrescaled time of the source snapshot.
    pub t: f64,
    pub t_ext: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub u_grid: Vec<f64>,
    pub y_inv: Vec<f64>,
    curve: QuotientCurve,
    t_prime: f64,
    graph: Pchip,
    inverse: Pchip,
    graph_nodes: usize,
    inverse_nodes: usize,
}

impl ProfileSamples {
    /// Builds the charts of a renormalized curve. `t`, `t_prime` record the
    /// source snapshot for the inverse map.
    pub fn from_curve(
        curve: QuotientCurve,
        tau: f64,
        tau_run: f64,
        t: f64,
        t_prime: f64,
        opts: &ChartOptions,
    ) -> Result<Self> {
        let p = curve.nodes();
        let m = p.len() - 1;
        let mut g = 1;
        while g <= m && (p[g - 1][1] - p[g][1]) <= opts.max_slope * (p[g][0] - p[g - 1][0]) {
            g += 1;
        }
        let graph_nodes = g;
        let mut j = m;
        while j >= 1 && (p[j][0] - p[j - 1][0]) <= opts.max_slope * (p[j - 1][1] - p[j][1]) {
            j -= 1;
        }
        let inverse_nodes = m - j + 1;
        if graph_nodes < 5 || inverse_nodes < 5 {
            return Err(Error::Coverage(format!(
                "charts too thin ({graph_nodes} graph, {inverse_nodes} inverse nodes)"
            )));
        }
        let gx: Vec<f64> = p[..graph_nodes].iter().map(|q| q[0]).collect();
        let gy: Vec<f64> = p[..graph_nodes].iter().map(|q| q[1]).collect();
        let graph = Pchip::with_end_slopes(gx, gy, Some(0.0), None)?;
        let ix: Vec<f64> = p[j..].iter().rev().map(|q| q[1]).collect();
        let iy: Vec<f64> = p[j..].iter().rev().map(|q| q[0]).collect();
        let inverse = Pchip::with_end_slopes(ix, iy, Some(0.0), None)?;

        let rho_max = graph.domain().1;
        let nr = (rho_max / opts.drho).floor() as usize;
        let rho: Vec<f64> = (0..=nr).map(|i| i as f64 * opts.drho).collect();
        let u: Vec<f64> = rho.iter().map(|r| graph.eval(*r)).collect();
        let u_max = inverse.domain().1;
        let nu = opts.inverse_samples.max(8);
        let u_grid: Vec<f64> = (0..=nu).map(|i| u_max * i as f64 / nu as f64).collect();
        let y_inv: Vec<f64> = u_grid.iter().map(|v| inverse.eval(*v)).collect();
        Ok(Self {
            sym: curve.sym(),
            tau,
            tau_run,
            t,
            t_ext: t + t_prime,
            rho,
            u,
            u_grid,
            y_inv,
            curve,
            t_prime,
            graph,
            inverse,
            graph_nodes,
            inverse_nodes,
        })
    }

    pub fn curve(&self) -> &QuotientCurve {
        &self.curve
    }

    pub fn t_prime(&self) -> f64 {
        self.t_prime
    }

    pub fn u_at(&self, rho: f64) -> f64 {
        self.graph.eval(rho)
    }

    pub fn u_rho_at(&self, rho: f64) -> f64 {
        self.graph.derivative(rho)
    }

    pub fn y_at(&self, u: f64) -> f64 {
        self.inverse.eval(u)
    }

    pub fn y_u_at(&self, u: f64) -> f64 {
        self.inverse.derivative(u)
    }

    /// Largest radius covered by the graph chart.
    pub fn graph_extent(&self) -> f64 {
        self.graph.domain().1
    }

    /// Largest height covered by the inverse chart.
    pub fn inverse_extent(&self) -> f64 {
        self.inverse.domain().1
    }

    pub fn graph_node_count(&self) -> usize {
        self.graph_nodes
    }

    /// Inverse-chart nodes with `u <= u_end`.
    pub fn inverse_nodes_below(&self, u_end: f64) -> usize {
        self.inverse.x().iter().filter(|u| **u <= u_end).count()
    }

    pub fn inverse_node_count(&self) -> usize {
        self.inverse_nodes
    }

    /// Renormalized tip position.
    pub fn tip(&self) -> f64 {
        self.curve.tip()
    }

    pub fn neck(&self) -> f64 {
        self.curve.neck()
    }

    /// Mean curvature of the induced hypersurface at the tip, renormalized.
    pub fn tip_curvature(&self) -> f64 {
        let p = self.curve.nodes();
        let m = p.len() - 1;
        let h = dist(p[m - 1], p[m]);
        let kappa = 2.0 * (p[m][0] - p[m - 1][0]) / (h * h);
        let f = self.sym.fiber() as f64;
        (1.0 + f) * kappa + (self.sym.k() as f64 - 1.0) / p[m][0]
    }

    /// Largest `rho` in the graph chart with `u >= level` (0 if none).
    pub fn rho_at_level(&self, level: f64) -> f64 {
        let (_, hi) = self.graph.domain();
        if self.graph.eval(0.0) < level {
            return 0.0;
        }
        if self.graph.eval(hi) >= level {
            return hi;
        }
        let (mut a, mut b) = (0.0, hi);
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if self.graph.eval(mid) >= level {
                a = mid;
            } else {
                b = mid;
            }
        }
        a
    }

    /// Projection of the truncated profile onto the three leading modes.
    pub fn project(&self, frame: &SpectralFrame, rho_cut: f64) -> Result<Projection> {
        project_truncated(|r| self.graph.eval(r), self.graph_extent(), rho_cut, self.sym, frame)
    }

    /// Maps the renormalized snapshot back to the unrescaled frame.
    pub fn unrenormalize(&self) -> QuotientCurve {
        self.curve.scaled(self.t_prime.sqrt(), self.t, Frame::Unrescaled)
    }

    /// Largest `|u(Y(v)) - v|` over the overlap of the two charts, together
    /// with a linear-interpolation error scale of the nodes in that overlap.
    pub fn chart_mismatch(&self) -> Option<(f64, f64)> {
        let lo = self.graph.eval(self.graph_extent());
        let hi = self.inverse_extent();
        if !(hi > lo) {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..=64 {
            let v = lo + (hi - lo) * i as f64 / 64.0;
            let r = self.inverse.eval(v);
            worst = worst.max((self.graph.eval(r) - v).abs());
        }
        let p = self.curve.nodes();
        let mut bound = 0.0f64;
        for i in 1..p.len() - 1 {
            if p[i][1] >= lo && p[i][1] <= hi {
                let chord = sub(p[i + 1], p[i - 1]);
                let sag = cross(chord, sub(p[i], p[i - 1])).abs() / dist(p[i - 1], p[i + 1]);
                bound = bound.max(0.25 * sag);
            }
        }
        Some((worst, bound))
    }
}

/// Renormalized view of a trajectory.
#[derive(Debug, Clone)]
pub struct RenormalizedRun {
    pub samples: Vec<ProfileSamples>,
    /// Snapshot indices that were dropped, with the reason.
    pub dropped: Vec<(usize, String)>,
}

/// Rescales every snapshot by `(t_ext - t)^{-1/2}` and builds its charts.
pub fn renormalize_trajectory(
    traj: &Trajectory,
    calib: TauCalibration,
    opts: &ChartOptions,
) -> Result<RenormalizedRun> {
    let sym = traj.last().sym();
    let offset = calib.offset(sym, traj.t_ext);
    let floor = opts.min_t_prime_factor * traj.t_ext_err;
    let mut samples = Vec::new();
    let mut dropped = Vec::new();
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let tp = traj.t_ext - snap.t();
        if !(tp > 0.0) || tp <= floor {
            dropped.push((i, format!("t_ext - t = {tp:.3e} below resolution {floor:.3e}")));
            continue;
        }
        let tau_run = -tp.ln();
        let curve = snap.scaled(tp.sqrt().recip(), tau_run + offset, Frame::Renormalized);
        match ProfileSamples::from_curve(curve, tau_run + offset, tau_run, snap.t(), tp, opts) {
            Ok(s) => samples.push(s),
            Err(e) => dropped.push((i, e.to_string())),
        }
    }
    if samples.is_empty() {
        return Err(Error::Coverage("no snapshot survived renormalization".into()));
    }
    Ok(RenormalizedRun { samples, dropped })
}

/// Tip chart in bowl scaling, `Z(s) = |tau|^{1/2} (Y(|tau|^{-1/2} s) - Y(0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TipZoom {
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub tau: f64,
}

impl TipZoom {
    /// True if second differences are all `<= tol`.
    pub fn is_concave(&self, tol: f64) -> bool {
        self.z.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= tol)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.z.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,z\n");
        for (a, b) in self.s.iter().zip(&self.z) {
            s.push_str(&format!("{a:.12e},{b:.12e}\n"));
        }
        s
    }
}

/// Minimum number of tip-chart nodes inside the zoom window.
pub const MIN_TIP_NODES: usize = 8;

pub fn zoom_tip(p: &ProfileSamples, s_max: f64, ds: f64) -> Result<TipZoom> {
    let scale = p.tau.abs().sqrt();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("zoom needs tau != 0, got {}", p.tau)));
    }
    if !(s_max > 0.0 && ds > 0.0) {
        return Err(Error::InvalidParameter("zoom window must be positive".into()));
    }
    let u_end = s_max / scale;
    if u_end > p.inverse_extent() {
        return Err(Error::Coverage(format!(
            "tip chart reaches s = {:.3}, requested {s_max}",
            p.inverse_extent() * scale
        )));
    }
    let count = p.inverse_nodes_below(u_end);
    if count < MIN_TIP_NODES {
        return Err(Error::Coverage(format!(
            "tip chart has {count} samples inside the zoom window, need {MIN_TIP_NODES}"
        )));
    }
    let n = (s_max / ds).round() as usize;
    let y0 = p.y_at(0.0);
    let s: Vec<f64> = (0..=n).map(|i| s_max * i as f64 / n as f64).collect();
    let z = s.iter().map(|sv| scale * (p.y_at(sv / scale) - y0)).collect();
    Ok(TipZoom { s, z, tau: p.tau })
}
