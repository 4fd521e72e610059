//! The long-ellipsoid radial pipeline: flow, renormalize, compare regions.

use ovals_core::asymptotics::{
    monitor_estimates, verify_region, MonitorParams, MonitorSeries, Region, RegionParams, RegionReport,
};
use ovals_core::radial_flow::{
    renormalize_trajectory, run_to_extinction, ChartOptions, ProfileSamples, QuotientCurve, RemeshPolicy,
    RenormalizedRun, RunConfig, TauCalibration, Trajectory,
};
use ovals_core::spectral_ou::{rho_cut_schedule, ModeTrace, Projection, SpectralFrame};
use ovals_core::{Error, Result, SymmetryClass};

pub const REGIONS: [Region; 4] = [Region::Parabolic, Region::Intermediate, Region::Tip, Region::Width];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSettings {
    pub sym: SymmetryClass,
    pub ell: f64,
    pub nodes: usize,
    pub remesh_fraction: f64,
    pub stop_area_ratio: f64,
    /// Number of late snapshots compared against the asymptotic regions.
    pub window: usize,
    /// Snapshot stride inside the window.
    pub stride: usize,
    pub region: RegionParams,
    pub monitor: MonitorParams,
    pub quadrature_nodes: usize,
}

impl RadialSettings {
    pub fn new(sym: SymmetryClass, ell: f64) -> Self {
        Self {
            sym,
            ell,
            nodes: 256,
            remesh_fraction: 0.08,
            stop_area_ratio: 1e-3,
            window: 8,
            stride: 3,
            region: RegionParams::default(),
            monitor: MonitorParams::defaults(sym),
            quadrature_nodes: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialStudy {
    pub settings: RadialSettings,
    pub trajectory: Trajectory,
    pub renormalized: RenormalizedRun,
    /// Window snapshots in time order.
    pub window: Vec<ProfileSamples>,
    /// One report per entry of [`REGIONS`].
    pub reports: Vec<RegionReport>,
    pub monitors: MonitorSeries,
    pub modes: ModeTrace,
    pub projections: Vec<(f64, Projection)>,
}

impl RadialStudy {
    pub fn report(&self, region: Region) -> &RegionReport {
        let i = REGIONS.iter().position(|r| *r == region).expect("every region is studied");
        &self.reports[i]
    }

    /// Largest `|alpha0 / predicted - 1|` over the window.
    pub fn mode_mismatch(&self) -> f64 {
        self.modes.relative_mismatch().into_iter().fold(0.0, f64::max)
    }

    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from("t,area\n");
        for (c, a) in self.trajectory.snapshots.iter().zip(&self.trajectory.areas) {
            s.push_str(&format!("{:.12e},{:.12e}\n", c.t(), a));
        }
        s
    }

    pub fn projections_csv(&self) -> String {
        let mut s = String::from("tau,rho_cut,a_plus,a_zero,a_minus,residual_norm\n");
        for (p, (rc, pr)) in self.window.iter().zip(&self.projections) {
            s.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                p.tau, rc, pr.a_plus, pr.a_zero, pr.a_minus, pr.residual
            ));
        }
        s
    }
}

pub fn radial_study(s: &RadialSettings) -> Result<RadialStudy> {
    if s.window < 3 || s.stride == 0 {
        return Err(Error::InvalidParameter("window needs at least three points and a positive stride".into()));
    }
    let initial = QuotientCurve::ellipsoid_adapted(s.ell, s.sym, s.nodes, s.remesh_fraction)?;
    let cfg = RunConfig {
        remesh: Some(RemeshPolicy { fraction: s.remesh_fraction, ..Default::default() }),
        stop_area_ratio: s.stop_area_ratio,
        ..Default::default()
    };
    let trajectory = run_to_extinction(&initial, &cfg)?;
    let renormalized =
        renormalize_trajectory(&trajectory, TauCalibration::Ellipsoid { ell: s.ell }, &ChartOptions::default())?;
    let n = renormalized.samples.len();
    let mut picks: Vec<usize> = (0..n).rev().step_by(s.stride).take(s.window).collect();
    picks.reverse();
    if picks.len() < 3 {
        return Err(Error::Coverage(format!("only {n} renormalized snapshots survived")));
    }
    let window: Vec<ProfileSamples> = picks.iter().map(|&i| renormalized.samples[i].clone()).collect();
    let reports = REGIONS.iter().map(|r| verify_region(&window, *r, &s.region)).collect::<Result<Vec<_>>>()?;
    let monitors = monitor_estimates(&window, &s.monitor)?;
    let frame = SpectralFrame::build(s.sym.k(), s.quadrature_nodes)?;
    let mut modes = ModeTrace::new(frame.mode_constant(s.sym)?);
    let mut projections = Vec::with_capacity(window.len());
    let theta = 0.3 * s.sym.cylinder_radius();
    for p in &window {
        let rc = rho_cut_schedule(p.tau.abs(), p.rho_at_level(theta));
        let pr = p.project(&frame, rc)?;
        modes.push(p.tau, &pr);
        projections.push((rc, pr));
    }
    Ok(RadialStudy { settings: *s, trajectory, renormalized, window, reports, monitors, modes, projections })
}
