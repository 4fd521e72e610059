//! Anisotropic ellipsoid flows for `k = 2`, their Gaussian densities and the
//! reciprocal width-ratio map.

mod density;
mod entropy;
mod flow;
mod surface;

pub use density::{
    density_target, huisken_density, normalize_run, ratio_map, solve_for_ratio, width_ratio,
    NormalizedRun, RatioSearch, RatioSolution,
};
pub use entropy::{sphere_area, sphere_entropy};
pub use flow::{
    aniso_dt, convexity_monitor, run_aniso, step_aniso, surface_area, AnisoConfig, AnisoStepPolicy,
    AnisoTrajectory, CellGeometry, StopRule,
};
pub use surface::{EllipsoidParams, RadialSurface, DELTA_CLAMP, MIN_GRID};

/// Quotient surface of the ellipsoid with parameters `p`.
pub fn init_quotient_ellipsoid(
    p: &EllipsoidParams,
    sym: crate::SymmetryClass,
    grid: usize,
) -> crate::Result<RadialSurface> {
    RadialSurface::ellipsoid(p, sym, grid)
}

/// Geometry of one cell of a surface.
pub fn cell_geometry(s: &RadialSurface, i: usize, j: usize) -> crate::Result<CellGeometry> {
    flow::cell_geometry(s, i, j)
}
