//! Symmetry-reduced flow of the quotient curve in the quarter plane.

mod charts;
mod curve;
mod remesh;
mod run;
mod step;
mod velocity;

pub use charts::{
    ellipsoid_tau, renormalize_trajectory, zoom_tip, ChartOptions, ProfileSamples,
    RenormalizedRun, TauCalibration, TipZoom, MIN_TIP_NODES,
};
pub use curve::{ellipse_axes, Frame, QuotientCurve, MIN_NODES};
pub use remesh::{needs_remesh, remesh, spacing_deviation, RemeshPolicy};
pub use run::{fit_extinction, run_to_extinction, RunConfig, Trajectory};
pub use step::{step_flow, step_flow_in_place, StepInfo, StepPolicy, Workspace};
pub use velocity::{curve_velocity, Kinematics};

/// Convenience alias for [`QuotientCurve::ellipsoid`].
pub fn init_profile_ellipsoid(
    ell: f64,
    sym: crate::SymmetryClass,
    m: usize,
) -> crate::Result<QuotientCurve> {
    QuotientCurve::ellipsoid(ell, sym, m)
}
