use ovals_core::aniso_flow::{
    huisken_density, normalize_run, run_aniso, solve_for_ratio, width_ratio, AnisoConfig, AnisoTrajectory,
    EllipsoidParams, NormalizedRun, RadialSurface, RatioSearch, StopRule,
};
use ovals_core::SymmetryClass;

use crate::config::{Kind, Param, Point};
use crate::error::CliError;
use crate::record::{Check, Outcome};
use crate::registry::Experiment;

use super::{symmetry, SYMMETRY_PARAMS};

/// Slack allowed for numerical increases of the Gaussian density.
pub const DENSITY_SLACK: f64 = 1e-3;

/// One flowed ellipsoid with its normalization and density history.
#[derive(Debug, Clone)]
pub struct WidthRun {
    pub trajectory: AnisoTrajectory,
    pub normalized: NormalizedRun,
    /// `(t, area, density)` at every snapshot before extinction.
    pub densities: Vec<[f64; 3]>,
}

impl WidthRun {
    /// Largest increase of the density between consecutive snapshots.
    pub fn density_increase(&self) -> f64 {
        self.densities.windows(2).map(|w| w[1][2] - w[0][2]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn densities_csv(&self) -> String {
        let mut s = String::from("t,area,density\n");
        for [t, a, d] in &self.densities {
            s.push_str(&format!("{t:.12e},{a:.12e},{d:.12e}\n"));
        }
        s
    }
}

pub fn width_run(ell: f64, a1: f64, sym: SymmetryClass, grid: usize, cfg: &AnisoConfig) -> Result<WidthRun, CliError> {
    let p = EllipsoidParams::new(ell, a1)?;
    let s = RadialSurface::ellipsoid(&p, sym, grid)?;
    let trajectory = run_aniso(&s, cfg)?;
    let normalized = normalize_run(&trajectory)?;
    let mut densities = Vec::new();
    for (snap, area) in trajectory.snapshots.iter().zip(&trajectory.areas) {
        if snap.t() < normalized.t_ext {
            densities.push([snap.t(), *area, huisken_density(snap, normalized.t_ext)?]);
        }
    }
    Ok(WidthRun { trajectory, normalized, densities })
}

fn aniso_config(p: &Point) -> AnisoConfig {
    let mut cfg = AnisoConfig { stop: StopRule::AreaRatio(p.f64("stop_area_ratio")), ..Default::default() };
    cfg.step.c_cfl = p.f64("c_cfl");
    cfg
}

fn validate_aniso(p: &Point) -> Result<(), CliError> {
    if p.usize("grid") < 32 {
        return Err(CliError::Validation(format!("`grid` must be at least 32, got {}", p.usize("grid"))));
    }
    if p.f64("stop_area_ratio") >= 1.0 {
        return Err(CliError::Validation("`stop_area_ratio` must lie in (0, 1)".into()));
    }
    if p.f64("c_cfl") > 0.5 {
        return Err(CliError::Validation("`c_cfl` above 0.5 is unstable".into()));
    }
    if p.f64("ell") < 1.0 {
        return Err(CliError::Validation("`ell` must be at least 1".into()));
    }
    Ok(())
}

const WIDTH_PARAMS: &[Param] = &[
    SYMMETRY_PARAMS[0],
    SYMMETRY_PARAMS[1],
    Param::new("ell", Kind::Positive, "2", "long-axis scale"),
    Param::new("a1", Kind::Positive, "0.5", "weight of the first long axis, a2 = 1 - a1").sweep(),
    Param::new("grid", Kind::Count, "32", "cells per side of the quarter grid"),
    Param::new("stop_area_ratio", Kind::Positive, "1e-3", "stop once the area falls below this fraction"),
    Param::new("c_cfl", Kind::Positive, "0.2", "time step safety factor"),
];

pub struct WidthRatio;

impl Experiment for WidthRatio {
    fn tag(&self) -> &'static str {
        "width-ratio"
    }

    fn describe(&self) -> &'static str {
        "reciprocal width ratio of flowed ellipsoids at the entropy normalization time"
    }

    fn params(&self) -> &'static [Param] {
        WIDTH_PARAMS
    }

    fn validate(&self, p: &Point) -> Result<(), CliError> {
        if p.f64("a1") >= 1.0 {
            return Err(CliError::Validation(format!("`a1` must lie in (0, 1), got {}", p.f64("a1"))));
        }
        validate_aniso(p)
    }

    fn run(&self, p: &Point) -> Result<Outcome, CliError> {
        let a1 = p.f64("a1");
        let r = width_run(p.f64("ell"), a1, symmetry(p)?, p.usize("grid"), &aniso_config(p))?;
        let nr = &r.normalized;
        let mut o = Outcome::default();
        o.metric("t_ext", nr.t_ext);
        o.metric("t_ext_err", r.trajectory.t_ext_err);
        o.metric("t_prime", nr.t_prime);
        o.metric("lambda", nr.lambda);
        o.metric("w1", nr.widths[0]);
        o.metric("w2", nr.widths[1]);
        o.metric("mu1", nr.mu[0]);
        o.metric("mu2", nr.mu[1]);
        o.metric("density_initial", nr.density_range.0);
        o.metric("density_final", nr.density_range.1);
        o.metric("min_three_convexity", r.trajectory.min_three_convexity);
        o.check(Check::at_most("density_increase", r.density_increase(), DENSITY_SLACK));
        if a1 == 0.5 {
            o.check(Check::at_most("mu1_symmetry", (nr.mu[0] - 0.5).abs(), 1e-6));
        }
        o.artifact("densities.csv", r.densities_csv());
        o.artifact("final_surface.csv", r.trajectory.last().to_csv());
        Ok(o)
    }

    /// A sweep over `a1` must give a strictly increasing `mu1`.
    fn aggregate(&self, results: &[(Point, Outcome)]) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        if results.len() < 2 {
            return Ok(o);
        }
        let mut rows: Vec<(f64, &Outcome)> = results.iter().map(|(p, r)| (p.f64("a1"), r)).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cols = ["t_ext", "t_prime", "lambda", "w1", "w2", "mu1", "mu2"];
        let mut csv = format!("a1,{}\n", cols.join(","));
        for (a1, r) in &rows {
            let vals: Vec<String> = cols.iter().map(|c| format!("{:.12e}", r.get(c).unwrap_or(f64::NAN))).collect();
            csv.push_str(&format!("{a1},{}\n", vals.join(",")));
        }
        o.artifact("ratio_map.csv", csv);
        let mu: Vec<f64> = rows.iter().map(|(_, r)| r.get("mu1").unwrap_or(f64::NAN)).collect();
        o.metric("mu1_min", mu.iter().copied().fold(f64::INFINITY, f64::min));
        o.metric("mu1_max", mu.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        o.check(Check::holds("mu1_strictly_increasing", mu.windows(2).all(|w| w[1] > w[0])));
        Ok(o)
    }

    fn verify(&self) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        let sym = SymmetryClass::new(3, 2)?;
        let mu = width_ratio([2.0, 2.0])?;
        o.check(Check::at_most("equal_widths", (mu[0] - 0.5).abs(), 1e-15));
        let mu = width_ratio([1.0, 3.0])?;
        o.check(Check::at_most("one_to_three", (mu[0] - 0.75).abs(), 1e-15));
        let s = RadialSurface::sphere(6f64.sqrt(), sym, 32)?;
        let cfg = AnisoConfig { stop: StopRule::AreaRatio(1e-2), ..Default::default() };
        let t = run_aniso(&s, &cfg)?;
        let t_ext = t.t_ext.ok_or_else(|| CliError::Numerical("sphere run has no extinction fit".into()))?;
        o.metric("sphere_t_ext", t_ext);
        o.check(Check::at_most("sphere_extinction_error", (t_ext - 1.0).abs(), 5e-3));
        Ok(o)
    }
}

const RATIO_PARAMS: &[Param] = &[
    SYMMETRY_PARAMS[0],
    SYMMETRY_PARAMS[1],
    Param::new("ell", Kind::Positive, "2", "long-axis scale"),
    Param::new("target", Kind::Positive, "0.4", "requested reciprocal width ratio mu1").sweep(),
    Param::new("grid", Kind::Count, "32", "cells per side of the quarter grid"),
    Param::new("stop_area_ratio", Kind::Positive, "1e-3", "stop once the area falls below this fraction"),
    Param::new("c_cfl", Kind::Positive, "0.2", "time step safety factor"),
    Param::new("tol", Kind::Positive, "0.01", "accepted |mu1 - target|"),
    Param::new("max_evaluations", Kind::Count, "24", "budget of ratio-map evaluations"),
];

pub struct RatioSolve;

impl Experiment for RatioSolve {
    fn tag(&self) -> &'static str {
        "ratio-solve"
    }

    fn describe(&self) -> &'static str {
        "find the axis weight whose flow has a requested reciprocal width ratio"
    }

    fn params(&self) -> &'static [Param] {
        RATIO_PARAMS
    }

    fn validate(&self, p: &Point) -> Result<(), CliError> {
        if p.f64("target") >= 1.0 {
            return Err(CliError::Validation(format!("`target` must lie in (0, 1), got {}", p.f64("target"))));
        }
        validate_aniso(p)
    }

    fn run(&self, p: &Point) -> Result<Outcome, CliError> {
        let mut search = RatioSearch::new(p.f64("ell"), symmetry(p)?, p.usize("grid"));
        search.run = aniso_config(p);
        search.tol_ratio = p.f64("tol");
        search.max_evaluations = p.usize("max_evaluations");
        let target = p.f64("target");
        let sol = solve_for_ratio(target, &search)?;
        let mut o = Outcome::default();
        o.metric("a1", sol.a1);
        o.metric("mu1", sol.mu1);
        o.metric("evaluations", sol.evaluations.len() as f64);
        o.check(Check::at_most("mu1_error", (sol.mu1 - target).abs(), search.tol_ratio));
        let mut csv = String::from("a1,mu1\n");
        for (a, m) in &sol.evaluations {
            csv.push_str(&format!("{a:.12e},{m:.12e}\n"));
        }
        o.artifact("evaluations.csv", csv);
        Ok(o)
    }

    fn verify(&self) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        let search = RatioSearch::new(2.0, SymmetryClass::new(3, 2)?, 32);
        let sol = solve_for_ratio(0.5, &search)?;
        o.check(Check::at_most("half_target_a1", (sol.a1 - 0.5).abs(), 1e-15));
        o.check(Check::holds("half_target_needs_no_flow", sol.evaluations.is_empty()));
        Ok(o)
    }
}
