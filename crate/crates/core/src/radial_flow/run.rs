use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

use super::curve::QuotientCurve;
use super::remesh::{needs_remesh, remesh, RemeshPolicy};
use super::step::{step_flow_in_place, StepPolicy, Workspace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub step: StepPolicy,
    pub remesh: Option<RemeshPolicy>,
    pub remesh_check_every: usize,
    /// Stop once the enclosed area falls below this fraction of the initial area.
    pub stop_area_ratio: f64,
    /// A snapshot is stored each time the area shrinks by this factor.
    pub snapshot_factor: f64,
    pub max_steps: usize,
    /// Number of trailing snapshots used for the extinction fit.
    pub fit_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            step: StepPolicy::default(),
            remesh: Some(RemeshPolicy::default()),
            remesh_check_every: 20,
            stop_area_ratio: 1e-4,
            snapshot_factor: 0.9,
            max_steps: 50_000_000,
            fit_points: 8,
        }
    }
}

/// Trajectory of an unrescaled run plus its extinction diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<QuotientCurve>,
    pub areas: Vec<f64>,
    pub t_ext: f64,
    /// Spread between the quadratic and linear extrapolations.
    pub t_ext_err: f64,
    pub roundness: f64,
    pub steps: usize,
    pub rejections: usize,
    pub remeshes: usize,
    pub convexity_lost: bool,
}

impl Trajectory {
    pub fn last(&self) -> &QuotientCurve {
        self.snapshots.last().expect("trajectory has snapshots")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|c| c.t()).collect()
    }
}

/// Runs the unrescaled flow until the area threshold, then extrapolates the
/// extinction time from the trailing area samples.
pub fn run_to_extinction(initial: &QuotientCurve, cfg: &RunConfig) -> Result<Trajectory> {
    if initial.frame() != super::curve::Frame::Unrescaled {
        return Err(Error::InvalidParameter("runs start from an unrescaled curve".into()));
    }
    if !(cfg.stop_area_ratio > 0.0 && cfg.stop_area_ratio < 1.0) {
        return Err(Error::InvalidParameter("stop_area_ratio must lie in (0,1)".into()));
    }
    if !(cfg.snapshot_factor > 0.0 && cfg.snapshot_factor < 1.0) {
        return Err(Error::InvalidParameter("snapshot_factor must lie in (0,1)".into()));
    }
    if cfg.fit_points < 3 {
        return Err(Error::InvalidParameter("extinction fit needs at least 3 points".into()));
    }
    let mut c = initial.clone();
    let mut remeshes = 0;
    if let Some(pol) = &cfg.remesh {
        if needs_remesh(&c, pol) {
            c = remesh(&c, pol)?;
            remeshes += 1;
        }
    }
    let a0 = c.enclosed_area();
    let stop = a0 * cfg.stop_area_ratio;
    let mut next_snap = a0 * cfg.snapshot_factor;
    let mut snapshots = vec![c.clone()];
    let mut areas = vec![a0];
    let mut ws = Workspace::default();
    let mut steps = 0;
    let mut rejections = 0;
    let mut was_convex = c.is_convex();
    let mut convexity_lost = false;
    loop {
        if steps >= cfg.max_steps {
            return Err(Error::StepBudget(cfg.max_steps));
        }
        let info = step_flow_in_place(&mut c, &cfg.step, None, &mut ws)?;
        steps += 1;
        rejections += info.rejections;
        if let Some(pol) = &cfg.remesh {
            if steps % cfg.remesh_check_every.max(1) == 0 && needs_remesh(&c, pol) {
                c = remesh(&c, pol)?;
                remeshes += 1;
            }
        }
        let area = c.enclosed_area();
        if area <= next_snap || area <= stop {
            let convex = c.is_convex();
            if was_convex && !convex {
                convexity_lost = true;
            }
            was_convex |= convex;
            snapshots.push(c.clone());
            areas.push(area);
            while next_snap >= area {
                next_snap *= cfg.snapshot_factor;
            }
        }
        if area <= stop {
            break;
        }
    }
    let k = cfg.fit_points.min(snapshots.len());
    let ts: Vec<f64> = snapshots[snapshots.len() - k..].iter().map(|s| s.t()).collect();
    let (t_ext, t_ext_err) = fit_extinction(&ts, &areas[areas.len() - k..])?;
    let roundness = c.roundness();
    Ok(Trajectory {
        snapshots,
        areas,
        t_ext,
        t_ext_err,
        roundness,
        steps,
        rejections,
        remeshes,
        convexity_lost,
    })
}

/// Least-squares extrapolation of `A(t)` to zero: returns the quadratic root
/// and its distance from the linear root.
pub fn fit_extinction(ts: &[f64], areas: &[f64]) -> Result<(f64, f64)> {
    let n = ts.len();
    if n < 3 || areas.len() != n {
        return Err(Error::InvalidParameter("extinction fit needs >= 3 samples".into()));
    }
    let t_last = ts[n - 1];
    let span = (t_last - ts[0]).abs().max(1e-300);
    let xs: Vec<f64> = ts.iter().map(|t| (t - t_last) / span).collect();
    let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (x, a) in xs.iter().zip(areas) {
        sx += x;
        sxx += x * x;
        sy += a;
        sxy += x * a;
    }
    let nf = n as f64;
    let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    let icpt = (sy - slope * sx) / nf;
    if !(slope < 0.0) {
        return Err(Error::Integration("area is not decreasing near extinction".into()));
    }
    let x_lin = -icpt / slope;
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (x, a) in xs.iter().zip(areas) {
        let v = Vector3::new(1.0, *x, x * x);
        m += v * v.transpose();
        rhs += v * *a;
    }
    let x_quad = m
        .lu()
        .solve(&rhs)
        .and_then(|c| {
            let (c0, c1, c2) = (c[0], c[1], c[2]);
            if c2.abs() < 1e-14 * c1.abs() {
                return Some(-c0 / c1);
            }
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc < 0.0 {
                return None;
            }
            let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
            let roots = [q / c2, c0 / q];
            roots
                .into_iter()
                .filter(|r| r.is_finite())
                .min_by(|a, b| (a - x_lin).abs().partial_cmp(&(b - x_lin).abs()).unwrap())
        })
        .unwrap_or(x_lin);
    let t_ext = t_last + x_quad * span;
    let err = (x_quad - x_lin).abs() * span;
    if !(t_ext.is_finite() && t_ext >= t_last) {
        return Err(Error::Integration(format!("extinction extrapolation failed ({t_ext})")));
    }
    Ok((t_ext, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_and_quadratic_laws() {
        let ts = [0.0, 0.1, 0.2, 0.3, 0.4];
        let lin: Vec<f64> = ts.iter().map(|t| 2.0 * (1.0 - t)).collect();
        let (te, err) = fit_extinction(&ts, &lin).unwrap();
        assert!((te - 1.0).abs() < 1e-12 && err < 1e-12);
        let quad: Vec<f64> = ts.iter().map(|t| (1.0 - t) * (1.0 - t) + (1.0 - t)).collect();
        let (te, _) = fit_extinction(&ts, &quad).unwrap();
        assert!((te - 1.0).abs() < 1e-10);
        assert!(fit_extinction(&ts, &[1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }
}
