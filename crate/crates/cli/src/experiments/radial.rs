use ovals_core::asymptotics::{
    intermediate_prediction, parabolic_prediction, verify_intermediate, verify_parabolic, FnProfile, ProfileView,
    Region, RegionParams,
};
use ovals_core::radial_flow::{run_to_extinction, QuotientCurve, RunConfig};
use ovals_core::spectral_ou::{apply_l_poly, Mode, SpectralFrame};
use ovals_core::SymmetryClass;

use crate::config::{Kind, Param, Point};
use crate::error::CliError;
use crate::record::{Check, Outcome};
use crate::registry::Experiment;
use crate::study::{radial_study, RadialSettings, RadialStudy};

use super::{symmetry, SYMMETRY_PARAMS};

const RADIAL_PARAMS: &[Param] = &[
    SYMMETRY_PARAMS[0],
    SYMMETRY_PARAMS[1],
    Param::new("ell", Kind::Positive, "16", "long-axis scale of the initial ellipsoid").sweep(),
    Param::new("nodes", Kind::Count, "256", "quotient-curve nodes"),
    Param::new("remesh_fraction", Kind::Positive, "0.08", "share of nodes placed by turning angle"),
    Param::new("stop_area_ratio", Kind::Positive, "1e-3", "stop once the area falls below this fraction"),
    Param::new("window", Kind::Count, "8", "late snapshots compared with the regions"),
    Param::new("stride", Kind::Count, "3", "snapshot stride inside the window"),
    Param::new("region_m", Kind::Positive, "3", "parabolic window rho <= M"),
    Param::new("sigma_max", Kind::Positive, "1", "intermediate window sigma <= sigma_max"),
    Param::new("tip_s_max", Kind::Positive, "5", "tip window s <= S"),
    Param::new("monitor_l", Kind::Positive, "10", "collar constant L"),
    Param::new("theta_factor", Kind::Positive, "0.3", "collar top 2 theta with theta = factor * sqrt(2(n-k))"),
    Param::new("quadrature_nodes", Kind::Count, "40", "Gauss nodes of the spectral frame"),
];

fn settings(p: &Point) -> Result<RadialSettings, CliError> {
    let sym = symmetry(p)?;
    let mut s = RadialSettings::new(sym, p.f64("ell"));
    s.nodes = p.usize("nodes");
    s.remesh_fraction = p.f64("remesh_fraction");
    s.stop_area_ratio = p.f64("stop_area_ratio");
    s.window = p.usize("window");
    s.stride = p.usize("stride");
    // The spectral trace schema omits the region and monitor keys.
    if p.has("region_m") {
        s.region.m = p.f64("region_m");
        s.region.sigma_max = p.f64("sigma_max");
        s.region.s_max = p.f64("tip_s_max");
        s.monitor.l = p.f64("monitor_l");
        s.monitor.theta = p.f64("theta_factor") * sym.cylinder_radius();
    }
    s.quadrature_nodes = p.usize("quadrature_nodes");
    Ok(s)
}

fn validate_radial(p: &Point) -> Result<(), CliError> {
    let s = settings(p)?;
    if s.ell <= 1.0 {
        return Err(CliError::Validation(format!("`ell` must exceed 1 for a long ellipsoid, got {}", s.ell)));
    }
    if s.stop_area_ratio >= 1.0 || s.remesh_fraction >= 1.0 {
        return Err(CliError::Validation("`stop_area_ratio` and `remesh_fraction` must lie in (0, 1)".into()));
    }
    if s.window < 3 || s.stride == 0 {
        return Err(CliError::Validation("`window` must be at least 3 and `stride` positive".into()));
    }
    if s.nodes < 16 || s.quadrature_nodes < 8 {
        return Err(CliError::Validation("need `nodes` >= 16 and `quadrature_nodes` >= 8".into()));
    }
    Ok(())
}

/// Headline metrics of a study, keyed as they appear in the summary table.
pub fn study_metrics(study: &RadialStudy) -> Outcome {
    let mut o = Outcome::default();
    let t = &study.trajectory;
    o.metric("t_ext", t.t_ext);
    o.metric("t_ext_err", t.t_ext_err);
    o.metric("steps", t.steps as f64);
    o.metric("tau_first", study.window[0].tau);
    o.metric("tau_latest", study.window.last().expect("window is nonempty").tau);
    let par = study.report(Region::Parabolic).latest();
    o.metric("parabolic_coefficient", par.coefficients[0]);
    o.metric("parabolic_deviation", par.deviation);
    o.metric("intermediate_deviation", study.report(Region::Intermediate).latest().deviation);
    o.metric("tip_deviation", study.report(Region::Tip).latest().deviation);
    let w = study.report(Region::Width).latest();
    o.metric("width_ratio", w.coefficients[0]);
    o.metric("width_deviation", w.deviation);
    o.metric("tip_curvature_ratio", w.coefficients[1]);
    o.metric("mode_constant", study.modes.c);
    o.metric("alpha0_mismatch", study.mode_mismatch());
    let m = &study.monitors;
    let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
    o.metric("quadratic_concavity_max", opt(m.max_quadratic_concavity()));
    o.metric("cylindrical_max", opt(m.max_cylindrical()));
    o.metric("collar_max", opt(m.max_collar()));
    o.metric("convexity_ratio_min", m.min_convexity_ratio());
    o.metrics.retain(|x| x.value.is_finite());
    o
}

/// Threshold checks on the latest window point of a study.
pub fn study_checks(study: &RadialStudy) -> Vec<Check> {
    let sym = study.settings.sym;
    let par = study.report(Region::Parabolic).latest();
    let w = study.report(Region::Width).latest();
    let mut c = vec![
        Check::at_most("parabolic_coefficient_error", (par.coefficients[0] - 1.0).abs(), 0.15),
        Check::at_most(
            "intermediate_deviation",
            study.report(Region::Intermediate).latest().deviation,
            0.15 * (sym.fiber() as f64).sqrt(),
        ),
        Check::at_most("tip_deviation", study.report(Region::Tip).latest().deviation, 0.1),
        Check::at_most("width_deviation", w.deviation, 0.2),
        Check::within("tip_curvature_ratio", w.coefficients[1], 0.35, 0.65),
        Check::at_most("alpha0_mismatch", study.mode_mismatch(), 0.2),
    ];
    let mon = &study.monitors;
    match mon.max_quadratic_concavity() {
        Some(v) => c.push(Check::at_most("quadratic_concavity_max", v, 1e-3)),
        None => c.push(Check::holds("quadratic_concavity_domain", false)),
    }
    match mon.max_collar() {
        Some(v) => c.push(Check::at_most("collar_max", v, 0.2)),
        None => c.push(Check::holds("collar_domain", false)),
    }
    c.push(Check::holds("convexity_ratio_positive", mon.min_convexity_ratio() > 0.0));
    c
}

fn study_artifacts(study: &RadialStudy, o: &mut Outcome) {
    o.artifact("trajectory.csv", study.trajectory_csv());
    o.artifact("final_curve.csv", study.trajectory.last().to_csv());
    for r in &study.reports {
        o.artifact(&format!("{}_window.csv", r.region), r.window_csv());
        o.artifact(&format!("{}_profile.csv", r.region), r.to_csv());
    }
    o.artifact("monitors.csv", study.monitors.to_csv());
    o.artifact("modes.csv", study.modes.to_csv());
}

/// Oracle self-tests of the region predictors, fed their own formulas.
fn predictor_self_tests(sym: SymmetryClass) -> Result<Outcome, CliError> {
    let mut o = Outcome::default();
    let params = RegionParams::default();
    let tau = -400.0;
    let exact = FnProfile { sym, tau, extent: 10.0, f: |r: f64| parabolic_prediction(sym, tau, r) };
    let views: [&dyn ProfileView; 1] = [&exact];
    let par = verify_parabolic(&views, &params)?;
    o.check(Check::at_most("parabolic_self_test", par.latest().deviation, 1e-9));
    o.check(Check::at_most("parabolic_self_coefficient", (par.latest().coefficients[0] - 1.0).abs(), 1e-9));
    let s = tau.abs().sqrt();
    let ell = FnProfile { sym, tau, extent: 1.2 * s, f: move |r: f64| intermediate_prediction(sym, r / s) };
    let views: [&dyn ProfileView; 1] = [&ell];
    o.check(Check::at_most("intermediate_self_test", verify_intermediate(&views, &params)?.latest().deviation, 1e-9));
    let circle = QuotientCurve::quarter_circle((2.0 * sym.n() as f64).sqrt(), sym, 64)?;
    let run = run_to_extinction(&circle, &RunConfig::default())?;
    o.metric("sphere_t_ext", run.t_ext);
    o.check(Check::at_most("sphere_extinction_error", (run.t_ext - 1.0).abs(), 5e-3));
    Ok(o)
}

pub struct RadialAsymptotics;

impl Experiment for RadialAsymptotics {
    fn tag(&self) -> &'static str {
        "radial-asymptotics"
    }

    fn describe(&self) -> &'static str {
        "long-ellipsoid radial run compared with the parabolic, intermediate, tip and width laws"
    }

    fn params(&self) -> &'static [Param] {
        RADIAL_PARAMS
    }

    fn validate(&self, p: &Point) -> Result<(), CliError> {
        validate_radial(p)
    }

    fn run(&self, p: &Point) -> Result<Outcome, CliError> {
        let study = radial_study(&settings(p)?)?;
        let mut o = study_metrics(&study);
        for c in study_checks(&study) {
            o.check(c);
        }
        study_artifacts(&study, &mut o);
        Ok(o)
    }

    /// With three or more scales, every region deviation must shrink as `|tau|` grows.
    fn aggregate(&self, results: &[(Point, Outcome)]) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        if results.len() < 3 {
            return Ok(o);
        }
        let mut rows: Vec<&(Point, Outcome)> = results.iter().collect();
        rows.sort_by(|a, b| a.0.f64("ell").total_cmp(&b.0.f64("ell")));
        let cols = ["parabolic_coefficient", "parabolic_deviation", "intermediate_deviation", "tip_deviation", "width_deviation", "tip_curvature_ratio"];
        let mut csv = format!("ell,tau_latest,{}\n", cols.join(","));
        for (p, r) in &rows {
            let vals: Vec<String> = cols.iter().map(|c| format!("{:.12e}", r.get(c).unwrap_or(f64::NAN))).collect();
            csv.push_str(&format!("{},{:.12e},{}\n", p.f64("ell"), r.get("tau_latest").unwrap_or(f64::NAN), vals.join(",")));
        }
        o.artifact("trend.csv", csv);
        let series = |f: &dyn Fn(&Outcome) -> f64| rows.iter().map(|(_, r)| f(r)).collect::<Vec<f64>>();
        let get = |r: &Outcome, k: &str| r.get(k).unwrap_or(f64::NAN);
        let trends: [(&str, Vec<f64>); 4] = [
            ("parabolic_coefficient_error", series(&|r| (get(r, "parabolic_coefficient") - 1.0).abs())),
            ("intermediate_deviation", series(&|r| get(r, "intermediate_deviation"))),
            ("width_deviation", series(&|r| get(r, "width_deviation"))),
            ("tip_curvature_deviation", series(&|r| (get(r, "tip_curvature_ratio") - 0.5).abs())),
        ];
        for (name, v) in trends {
            let ok = v.windows(2).all(|w| w[1] < w[0]);
            o.check(Check::holds(&format!("{name}_decreasing"), ok));
        }
        Ok(o)
    }

    fn verify(&self) -> Result<Outcome, CliError> {
        predictor_self_tests(SymmetryClass::new(3, 2)?)
    }
}

/// The spectral identities of the radial Ornstein-Uhlenbeck operator.
pub fn spectral_identities(k: usize, m: usize) -> Result<Outcome, CliError> {
    let mut o = Outcome::default();
    let frame = SpectralFrame::build(k, m)?;
    let psi0 = frame.psi(Mode::Neutral);
    let psim = frame.psi(Mode::Stable);
    let l0 = apply_l_poly(&psi0, k)?;
    let lm = apply_l_poly(&psim, k)?;
    o.check(Check::at_most("l_psi0_norm", frame.norm(|r| l0.eval(r))?, 1e-9));
    o.check(Check::at_most("l_psi_minus_plus_psi_minus_norm", frame.norm(|r| lm.eval(r) + psim.eval(r))?, 1e-9));
    let cube = frame.inner_poly(&(&psi0 * &psi0), &psi0)?;
    let c0 = frame.constant(Mode::Neutral);
    o.metric("psi0_cube", cube);
    o.check(Check::at_most("psi0_cube_minus_8c0", (cube - 8.0 * c0).abs(), 1e-8));
    if k == 2 {
        let one = frame.inner(|_| 1.0, |_| 1.0)?;
        let n2 = frame.norm(|r| r * r - 4.0)?.powi(2);
        o.check(Check::at_most("k2_unit_norm_error", (one - 2.0).abs(), 1e-10));
        o.check(Check::at_most("k2_neutral_norm_error", (n2 - 32.0).abs(), 1e-10));
    }
    Ok(o)
}

pub struct SpectralTrace;

const SPECTRAL_PARAMS: &[Param] = &[
    RADIAL_PARAMS[0],
    RADIAL_PARAMS[1],
    RADIAL_PARAMS[2],
    RADIAL_PARAMS[3],
    RADIAL_PARAMS[4],
    RADIAL_PARAMS[5],
    RADIAL_PARAMS[6],
    RADIAL_PARAMS[7],
    RADIAL_PARAMS[13],
];

impl Experiment for SpectralTrace {
    fn tag(&self) -> &'static str {
        "spectral-trace"
    }

    fn describe(&self) -> &'static str {
        "neutral-mode coefficient of a long-ellipsoid run against -1/(c|tau|)"
    }

    fn params(&self) -> &'static [Param] {
        SPECTRAL_PARAMS
    }

    fn validate(&self, p: &Point) -> Result<(), CliError> {
        validate_radial(p)
    }

    fn run(&self, p: &Point) -> Result<Outcome, CliError> {
        let s = settings(p)?;
        let study = radial_study(&s)?;
        let mut o = spectral_identities(s.sym.k(), s.quadrature_nodes)?;
        o.metric("t_ext", study.trajectory.t_ext);
        o.metric("mode_constant", study.modes.c);
        o.metric("alpha0_latest", *study.modes.alpha0.last().expect("window is nonempty"));
        o.metric("alpha0_mismatch", study.mode_mismatch());
        o.check(Check::at_most("alpha0_mismatch", study.mode_mismatch(), 0.2));
        o.artifact("modes.csv", study.modes.to_csv());
        o.artifact("projections.csv", study.projections_csv());
        Ok(o)
    }

    fn verify(&self) -> Result<Outcome, CliError> {
        let mut o = spectral_identities(2, 40)?;
        o.checks.extend(spectral_identities(1, 40)?.checks.into_iter().map(|mut c| {
            c.name = format!("k1_{}", c.name);
            c
        }));
        Ok(o)
    }
}
