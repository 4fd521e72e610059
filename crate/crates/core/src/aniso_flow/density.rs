use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::SymmetryClass;

use super::entropy::{sphere_area, sphere_entropy};
use super::flow::{cell_geometry, run_aniso, step_aniso, AnisoConfig, AnisoTrajectory};
use super::surface::{EllipsoidParams, RadialSurface, DELTA_CLAMP};

/// Gaussian density of the induced hypersurface centred at `(0, t0)`.
///
/// The hypersurface element is `|S^{n-2}| x3^{n-2} dSigma`, and the quarter
/// domain is weighted by 4 for the two reflections in `x1` and `x2`.
pub fn huisken_density(s: &RadialSurface, t0: f64) -> Result<f64> {
    let tau = t0 - s.t();
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("density needs t < t0, got t={} t0={t0}", s.t())));
    }
    let n = s.sym().n();
    let grid = s.grid_size();
    let g = &s.grid;
    let mut sum = 0.0;
    for j in 0..grid {
        // Divide out the analytically weighted factor sin(phi) cos(phi)^{n-2}.
        let factor = g.sp[j] * g.cp[j].powi(n as i32 - 2);
        let mut ring = 0.0;
        for i in 0..grid {
            let c = cell_geometry(s, i, j)?;
            let x2 = (c.x[0] * c.x[0] + c.x[1] * c.x[1]) + c.x[2] * c.x[2];
            ring += c.x[2].powi(n as i32 - 2) * c.area * (-x2 / (4.0 * tau)).exp();
        }
        sum += g.w_density[j] * ring / factor;
    }
    Ok(4.0 * g.h * sphere_area(n - 2) * sum / (4.0 * PI * tau).powf(0.5 * n as f64))
}

/// Normalization level `(sigma_{n-2} + sigma_{n-1}) / 2`.
pub fn density_target(sym: SymmetryClass) -> Result<f64> {
    let f = sym.fiber();
    Ok(0.5 * (sphere_entropy(f)? + sphere_entropy(f + 1)?))
}

/// Reciprocal width ratio `mu_j = w_j^{-1} / sum w^{-1}`.
pub fn width_ratio(widths: [f64; 2]) -> Result<[f64; 2]> {
    if !(widths[0] > 0.0 && widths[1] > 0.0) {
        return Err(Error::InvalidParameter(format!("widths must be positive, got {widths:?}")));
    }
    let inv = [1.0 / widths[0], 1.0 / widths[1]];
    let s = inv[0] + inv[1];
    Ok([inv[0] / s, inv[1] / s])
}

/// A run rescaled so that the entropy normalization happens at time -1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRun {
    pub t_ext: f64,
    pub t_prime: f64,
    pub lambda: f64,
    pub widths: [f64; 2],
    pub mu: [f64; 2],
    /// Densities at the first and last usable snapshots.
    pub density_range: (f64, f64),
}

/// Locate the time at which the density crosses [`density_target`] and read
/// off the rescaled widths there.
pub fn normalize_run(traj: &AnisoTrajectory) -> Result<NormalizedRun> {
    let t_ext = traj
        .t_ext
        .ok_or_else(|| Error::InvalidParameter("normalization needs an extinction run".into()))?;
    let first = &traj.snapshots[0];
    let target = density_target(first.sym())?;
    let usable: Vec<&RadialSurface> = traj.snapshots.iter().filter(|s| s.t() < t_ext).collect();
    let dens = usable.iter().map(|s| huisken_density(s, t_ext)).collect::<Result<Vec<_>>>()?;
    let (hi, lo) = (dens[0], *dens.last().expect("initial snapshot is usable"));
    if !(hi >= target && lo < target) {
        return Err(Error::OutOfRange { target, lo, hi });
    }
    // Density is monotone, so the crossing interval is found by bisection.
    let idx = dens.partition_point(|d| *d >= target) - 1;
    let t_stop = usable[idx + 1].t();
    let mut s = usable[idx].clone();
    let mut prev = (s.t(), dens[idx], s.extents());
    loop {
        let (next, _, _) = step_aniso(&s, &traj.config.step, Some(t_stop - s.t()))?;
        s = next;
        let d = huisken_density(&s, t_ext)?;
        let cur = (s.t(), d, s.extents());
        if d < target || s.t() >= t_stop {
            let w = if cur.1 < prev.1 { ((prev.1 - target) / (prev.1 - cur.1)).clamp(0.0, 1.0) } else { 1.0 };
            let t_prime = prev.0 + w * (cur.0 - prev.0);
            let lambda = (t_ext - t_prime).powf(-0.5);
            let lerp = |c: usize| prev.2[c] + w * (cur.2[c] - prev.2[c]);
            let widths = [lambda * lerp(0), lambda * lerp(1)];
            return Ok(NormalizedRun {
                t_ext,
                t_prime,
                lambda,
                widths,
                mu: width_ratio(widths)?,
                density_range: (hi, lo),
            });
        }
        prev = cur;
    }
}

/// Settings for evaluating the width-ratio map `F(a1)` and inverting it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSearch {
    pub ell: f64,
    pub sym: SymmetryClass,
    pub grid: usize,
    pub run: AnisoConfig,
    pub tol_ratio: f64,
    pub max_evaluations: usize,
}

impl RatioSearch {
    pub fn new(ell: f64, sym: SymmetryClass, grid: usize) -> Self {
        Self { ell, sym, grid, run: AnisoConfig::default(), tol_ratio: 0.01, max_evaluations: 24 }
    }
}

/// Evaluate the width-ratio map at `a1`: flow the ellipsoid and normalize it.
pub fn ratio_map(a1: f64, search: &RatioSearch) -> Result<NormalizedRun> {
    let p = EllipsoidParams::new(search.ell, a1)?;
    let s = RadialSurface::ellipsoid(&p, search.sym, search.grid)?;
    normalize_run(&run_aniso(&s, &search.run)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSolution {
    pub a1: f64,
    pub mu1: f64,
    /// Every `(a1, F(a1))` evaluated during the search.
    pub evaluations: Vec<(f64, f64)>,
}

/// Find `a1` with `F(a1) = target` by bisection on the lower half of the simplex,
/// using `F(1 - a1) = 1 - F(a1)` for targets above one half.
pub fn solve_for_ratio(target: f64, search: &RatioSearch) -> Result<RatioSolution> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("target ratio must lie in (0, 1), got {target}")));
    }
    if target > 0.5 {
        let mut sol = solve_for_ratio(1.0 - target, search)?;
        sol.a1 = 1.0 - sol.a1;
        sol.mu1 = 1.0 - sol.mu1;
        for e in sol.evaluations.iter_mut() {
            *e = (1.0 - e.0, 1.0 - e.1);
        }
        return Ok(sol);
    }
    let tol = search.tol_ratio;
    if 0.5 - target <= tol {
        return Ok(RatioSolution { a1: 0.5, mu1: 0.5, evaluations: Vec::new() });
    }
    let mut evals = Vec::new();
    let f = |a: f64, evals: &mut Vec<(f64, f64)>| -> Result<f64> {
        let m = ratio_map(a, search)?.mu[0];
        evals.push((a, m));
        Ok(m)
    };
    let (mut lo, mut hi) = (DELTA_CLAMP, 0.5);
    let (mut f_lo, mut f_hi) = (f(lo, &mut evals)?, 0.5);
    if (f_lo - target).abs() <= tol {
        return Ok(RatioSolution { a1: lo, mu1: f_lo, evaluations: evals });
    }
    if target < f_lo {
        return Err(Error::OutOfRange { target, lo: f_lo, hi: 1.0 - f_lo });
    }
    while evals.len() < search.max_evaluations {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid, &mut evals)?;
        if (fm - target).abs() <= tol {
            return Ok(RatioSolution { a1: mid, mu1: fm, evaluations: evals });
        }
        if !(fm > f_lo && fm < f_hi) {
            return scan_and_refine(target, search, evals);
        }
        if fm < target {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    Err(Error::Integration(format!(
        "ratio search did not reach tolerance {tol} in {} evaluations",
        search.max_evaluations
    )))
}

/// Fallback when the sampled map is not monotone: scan a grid, then bisect the
/// first bracketing cell.
fn scan_and_refine(target: f64, search: &RatioSearch, mut evals: Vec<(f64, f64)>) -> Result<RatioSolution> {
    let grid: Vec<f64> = (0..=8).map(|i| DELTA_CLAMP + (0.5 - DELTA_CLAMP) * i as f64 / 8.0).collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &a in &grid {
        let m = if a == 0.5 { 0.5 } else { ratio_map(a, search)?.mu[0] };
        evals.push((a, m));
        vals.push(m);
    }
    for w in 0..grid.len() - 1 {
        let (mut lo, mut hi) = (grid[w], grid[w + 1]);
        let (mut f_lo, f_hi) = (vals[w], vals[w + 1]);
        if (f_lo - target) * (f_hi - target) > 0.0 {
            continue;
        }
        while evals.len() < search.max_evaluations + grid.len() {
            let mid = 0.5 * (lo + hi);
            let fm = ratio_map(mid, search)?.mu[0];
            evals.push((mid, fm));
            if (fm - target).abs() <= search.tol_ratio {
                return Ok(RatioSolution { a1: mid, mu1: fm, evaluations: evals });
            }
            if (fm - target) * (f_lo - target) > 0.0 {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
            }
        }
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Err(Error::OutOfRange { target, lo, hi: 1.0 - lo })
}
