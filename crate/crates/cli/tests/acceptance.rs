//! Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
//!
//! Everything runs sequentially; expect roughly a quarter of an hour of compute.

use std::process::ExitCode;
use std::time::Instant;

use ovals_cli::experiments::{spectral_identities, width_run, DENSITY_SLACK};
use ovals_cli::study::{radial_study, RadialSettings, RadialStudy};
use ovals_cli::{run_experiment, RawConfig, Registry, RunOptions};
use ovals_core::aniso_flow::{
    huisken_density, ratio_map, run_aniso, solve_for_ratio, sphere_entropy, AnisoConfig, RadialSurface, RatioSearch,
    StopRule,
};
use ovals_core::asymptotics::Region;
use ovals_core::radial_flow::{run_to_extinction, QuotientCurve, RunConfig};
use ovals_core::soliton_atlas::{bowl_solve, foliation_divergence, shrinker_shoot, tail_shrinker_shoot, FoliationLeaf};
use ovals_core::SymmetryClass;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

const FAMILY: [f64; 3] = [4.0, 8.0, 16.0];
/// Long-axis scale at which the width-ratio map is computable.
const FEASIBLE_ELL: f64 = 2.0;

struct Line {
    id: usize,
    passed: bool,
    text: String,
}

fn line(id: usize, passed: bool, text: impl Into<String>) -> Line {
    Line { id, passed, text: text.into() }
}

fn sym() -> SymmetryClass {
    SymmetryClass::new(3, 2).expect("valid symmetry class")
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn series(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" > ")
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// The three radial studies shared by criteria 3 to 8, with their wall-clock times.
struct Family {
    studies: Vec<RadialStudy>,
    seconds: Vec<f64>,
}

impl Family {
    fn run() -> Res<Self> {
        let mut studies = Vec::new();
        let mut seconds = Vec::new();
        for ell in FAMILY {
            let start = Instant::now();
            studies.push(radial_study(&RadialSettings::new(sym(), ell))?);
            seconds.push(start.elapsed().as_secs_f64());
        }
        Ok(Self { studies, seconds })
    }

    fn longest(&self) -> &RadialStudy {
        self.studies.last().expect("family is nonempty")
    }

    fn map(&self, f: impl Fn(&RadialStudy) -> f64) -> Vec<f64> {
        self.studies.iter().map(f).collect()
    }
}

fn latest(s: &RadialStudy, r: Region) -> f64 {
    s.report(r).latest().deviation
}

fn width_coefficients(s: &RadialStudy) -> [f64; 2] {
    let c = &s.report(Region::Width).latest().coefficients;
    [c[0], c[1]]
}

fn c1() -> Res<(Line, Vec<f64>)> {
    let n = sym().n() as f64;
    let start = Instant::now();
    let curve = QuotientCurve::quarter_circle((2.0 * n).sqrt(), sym(), 256)?;
    let radial = run_to_extinction(&curve, &RunConfig::default())?.t_ext;
    let t_radial = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let sphere = RadialSurface::sphere((2.0 * n).sqrt(), sym(), 64)?;
    let traj = run_aniso(&sphere, &AnisoConfig { stop: StopRule::AreaRatio(1e-2), ..Default::default() })?;
    let t_aniso = start.elapsed().as_secs_f64();
    let aniso = traj.t_ext.ok_or("aniso sphere did not reach extinction")?;

    let mut densities = Vec::new();
    for s in traj.snapshots.iter().filter(|s| s.t() < aniso) {
        densities.push(huisken_density(s, aniso)?);
    }
    let ok = rel(radial, 1.0) <= 5e-3 && rel(aniso, 1.0) <= 5e-3 && t_radial < 30.0 && t_aniso < 30.0;
    let text = format!(
        "sphere extinction: radial 256 nodes t_ext {radial:.6} ({t_radial:.1} s), aniso 64x64 t_ext {aniso:.6} ({t_aniso:.1} s); need 1 +- 0.5%, < 30 s each"
    );
    Ok((line(1, ok, text), densities))
}

fn c2() -> Res<Line> {
    let o = spectral_identities(2, 40)?;
    let failed: Vec<&str> = o.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let worst = o.checks.iter().map(|c| format!("{} {:.1e}", c.name, c.value)).collect::<Vec<_>>().join(", ");
    let text = if failed.is_empty() { format!("spectral identities: {worst}") } else { format!("spectral identities failed: {failed:?}") };
    Ok(line(2, failed.is_empty(), text))
}

fn c3(f: &Family) -> Line {
    let s = f.longest();
    let coef = s.report(Region::Parabolic).latest().coefficients[0];
    let errs = f.map(|s| (s.report(Region::Parabolic).latest().coefficients[0] - 1.0).abs());
    let secs = *f.seconds.last().expect("family is nonempty");
    let ok = (coef - 1.0).abs() <= 0.15 && decreasing(&errs) && secs < 300.0;
    let text = format!(
        "parabolic law at ell 16: coefficient {coef:.5} (within 15% of 1), |c-1| over ell 4/8/16: {}, {secs:.1} s (< 300 s)",
        series(&errs)
    );
    line(3, ok, text)
}

fn c4(f: &Family) -> Line {
    let s = f.longest();
    let m = s.mode_mismatch();
    line(4, m <= 0.2, format!("mode law: computed c = {:.6}, max |alpha0 (c|tau|) + 1| over the window {m:.2e} (<= 0.2)", s.modes.c))
}

fn c5(f: &Family) -> Line {
    let limit = 0.15 * (sym().fiber() as f64).sqrt();
    let dev = latest(f.longest(), Region::Intermediate);
    let trend = f.map(|s| latest(s, Region::Intermediate));
    let ok = dev <= limit && decreasing(&trend);
    line(5, ok, format!("intermediate region: latest {dev:.3e} (<= {limit:.3}), over ell 4/8/16: {}", series(&trend)))
}

fn c6(f: &Family) -> Res<Line> {
    let dev = latest(f.longest(), Region::Tip);
    let bowl = bowl_solve(sym().tip_dimension(), std::f64::consts::FRAC_1_SQRT_2, 50.0)?;
    let series_err = (bowl.numerical_second_derivative() - bowl.series_second_derivative()).abs();
    let ok = dev <= 0.1 && series_err <= 1e-6;
    Ok(line(6, ok, format!("tip region: sup |Z - Zbar| {dev:.3e} (<= 0.1); bowl Z''(0) against series {series_err:.1e} (<= 1e-6)")))
}

fn c7(f: &Family) -> Line {
    let width = f.map(|s| s.report(Region::Width).latest().deviation);
    let h = f.map(|s| width_coefficients(s)[1]);
    let h_gap: Vec<f64> = h.iter().map(|x| (x - 0.5).abs()).collect();
    let last_h = *h.last().expect("family is nonempty");
    let ok = decreasing(&width)
        && *width.last().expect("family is nonempty") <= 0.2
        && (0.35..=0.65).contains(&last_h)
        && decreasing(&h_gap);
    let text = format!(
        "width laws over ell 4/8/16: width deviation {} (ends <= 0.2), tip curvature ratio {:.4} -> {:.4} -> {last_h:.4} (in [0.35, 0.65], toward 1/2)",
        series(&width),
        h[0],
        h[1]
    );
    line(7, ok, text)
}

fn c8(f: &Family) -> Line {
    let conc: Vec<Option<f64>> = f.studies.iter().map(|s| s.monitors.max_quadratic_concavity()).collect();
    let collar: Vec<Option<f64>> = f.studies.iter().map(|s| s.monitors.max_collar()).collect();
    let convex = f.map(|s| s.monitors.min_convexity_ratio());
    let fmt = |v: &[Option<f64>]| {
        v.iter().map(|x| x.map_or("empty".to_string(), |x| format!("{x:.3e}"))).collect::<Vec<_>>().join(", ")
    };
    let conc_ok = conc.iter().all(|c| c.is_some_and(|c| c <= 1e-3));
    let collar_ok = collar.iter().flatten().count() > 0 && collar.iter().flatten().all(|c| *c <= 0.2);
    let convex_ok = convex.iter().all(|c| *c > 0.0);
    let text = format!(
        "monitors over ell 4/8/16: max (u^2)_rr {} (<= 1e-3), collar {} (<= 0.2 where defined), 3-convexity ratio min {:.3}",
        fmt(&conc),
        fmt(&collar),
        convex.iter().cloned().fold(f64::INFINITY, f64::min)
    );
    line(8, conc_ok && collar_ok && convex_ok, text)
}

fn c9() -> Res<Line> {
    let sym = sym();
    let d = sym.tip_dimension();
    let tol = 1e-8;
    let mut worst_compact = f64::NEG_INFINITY;
    for a in [8.0, 12.0, 16.0] {
        let leaf = FoliationLeaf::Compact { profile: shrinker_shoot(a, d, 1e-10)?, eta: 1.0 };
        for s in foliation_divergence(&leaf, sym, 2.0, 200)? {
            worst_compact = worst_compact.max(s.value);
        }
    }
    let mut worst_tail = f64::INFINITY;
    for b in [0.1, 0.2, 0.4] {
        let leaf = FoliationLeaf::Tail { profile: tail_shrinker_shoot(b, d, 200.0)?, eta: 1.0 };
        for s in foliation_divergence(&leaf, sym, 2.0, 200)? {
            worst_tail = worst_tail.min(s.value);
        }
    }
    // the quadratic bound is stated for the three-dimensional shrinker
    let (a, bound_d) = (10.0, 3);
    let cyl = (2.0 * (bound_d as f64 - 1.0)).sqrt();
    let shrinker = shrinker_shoot(a, bound_d, 1e-10)?;
    let mut excess = f64::NEG_INFINITY;
    for i in 0..=400 {
        let r = 0.5 * a * i as f64 / 400.0;
        excess = excess.max(shrinker.u_at(r)? - cyl * (1.0 - (r * r - 3.0) / (2.0 * a * a)));
    }
    let ok = worst_compact <= tol && worst_tail >= -tol && excess <= 0.0;
    let text = format!(
        "foliation signs: compact a in {{8,12,16}} max {worst_compact:.2e} (<= {tol:e}), tail b in {{0.1,0.2,0.4}} min {worst_tail:.2e} (>= -{tol:e}); shrinker bound (d 3, a 10, r <= a/2) excess {excess:.3e} (<= 0)"
    );
    Ok(line(9, ok, text))
}

/// Width-ratio runs at the feasible scale, shared by criteria 10 and 11.
struct RatioStudy {
    sweep: Vec<(f64, f64, f64)>,
    solves: Vec<(f64, f64, f64)>,
    mu_coarse: f64,
    mu_fine: f64,
    seconds: f64,
}

fn ratio_study() -> Res<RatioStudy> {
    let start = Instant::now();
    let cfg = AnisoConfig::default();
    let mut sweep = Vec::new();
    for i in 2..=8 {
        let a1 = i as f64 / 10.0;
        let run = width_run(FEASIBLE_ELL, a1, sym(), 32, &cfg)?;
        sweep.push((a1, run.normalized.mu[0], run.density_increase()));
    }
    let search = RatioSearch::new(FEASIBLE_ELL, sym(), 32);
    let mut solves = Vec::new();
    for target in [0.4, 0.5, 0.6] {
        let sol = solve_for_ratio(target, &search)?;
        solves.push((target, sol.a1, sol.mu1));
    }
    let mu_coarse = sweep.iter().find(|s| (s.0 - 0.3).abs() < 1e-12).ok_or("a1 = 0.3 missing")?.1;
    let mu_fine = ratio_map(0.3, &RatioSearch::new(FEASIBLE_ELL, sym(), 64))?.mu[0];
    Ok(RatioStudy { sweep, solves, mu_coarse, mu_fine, seconds: start.elapsed().as_secs_f64() })
}

fn c10(r: &RatioStudy) -> Line {
    let long = ratio_map(0.3, &RatioSearch::new(16.0, sym(), 32));
    let long_text = match &long {
        Ok(run) => format!("ell 16 mu1 {:.4}", run.mu[0]),
        Err(e) => format!("ell 16 not normalizable ({e})"),
    };
    let mus: Vec<f64> = r.sweep.iter().map(|s| s.1).collect();
    let monotone = mus.windows(2).all(|w| w[1] > w[0]);
    let spans = mus[0] <= 0.35 && *mus.last().expect("sweep is nonempty") >= 0.65;
    let hits = r.solves.iter().all(|(t, _, mu)| (mu - t).abs() <= 0.01);
    let drift = (r.mu_fine - r.mu_coarse).abs();
    let signal = (r.mu_coarse - 0.5).abs() > 5.0 * drift;
    let surrogate = monotone && spans && hits && signal && r.seconds < 1800.0;
    let solves: Vec<String> = r.solves.iter().map(|(t, a, mu)| format!("{t} <- a1 {a:.4} (mu1 {mu:.4})")).collect();
    let text = format!(
        "width-ratio map: {long_text}; at ell {FEASIBLE_ELL} [{}]: mu1 over a1 0.2..0.8 {:.4}..{:.4} monotone {monotone}, solves {}, |mu1(0.3) - 1/2| {:.4} vs 5 x drift {:.1e}, {:.0} s",
        if surrogate { "ok" } else { "not ok" },
        mus[0],
        mus.last().expect("sweep is nonempty"),
        solves.join(", "),
        (r.mu_coarse - 0.5).abs(),
        5.0 * drift,
        r.seconds,
    );
    line(10, long.is_ok() && surrogate, text)
}

fn c11(r: &RatioStudy, sphere: &[f64]) -> Res<Line> {
    let s1 = sphere_entropy(1)?;
    let s2 = sphere_entropy(2)?;
    let e1 = (s1 - (2.0 * std::f64::consts::PI / std::f64::consts::E).sqrt()).abs();
    let e2 = (s2 - 4.0 / std::f64::consts::E).abs();
    let rise = r.sweep.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let sigma = sphere_entropy(sym().n())?;
    let spread = sphere.iter().map(|d| rel(*d, sigma)).fold(0.0, f64::max);
    let sphere_rise = sphere.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let ok = e1 <= 1e-6 && e2 <= 1e-6 && rise <= DENSITY_SLACK && sphere_rise <= DENSITY_SLACK && spread <= 5e-3;
    let text = format!(
        "densities: sigma1 error {e1:.1e}, sigma2 error {e2:.1e} (<= 1e-6); largest density rise {:.1e} (<= 1e-3); sphere density within {spread:.2e} of sigma3 (<= 0.5%)",
        rise.max(sphere_rise)
    );
    Ok(line(11, ok, text))
}

fn c12(f: &Family, r: &RatioStudy) -> Res<Line> {
    let reg = Registry::builtin();
    let raw = RawConfig::parse("a1 = 0.3, 0.7\n")?;
    let one = run_experiment(&reg, "width-ratio", &raw, &RunOptions { threads: Some(1), verify_only: false })?;
    let two = run_experiment(&reg, "width-ratio", &raw, &RunOptions { threads: Some(2), verify_only: false })?;
    let identical = one.artifacts == two.artifacts
        && one.record.elements == two.record.elements
        && one.record.summary_table() == two.record.summary_table();

    let coarse = &f.studies[0];
    let mut fine_settings = coarse.settings;
    fine_settings.nodes *= 2;
    let fine = radial_study(&fine_settings)?;
    let pairs = [
        ("t_ext", coarse.trajectory.t_ext, fine.trajectory.t_ext),
        ("mu1", r.mu_coarse, r.mu_fine),
        (
            "parabolic_coefficient",
            coarse.report(Region::Parabolic).latest().coefficients[0],
            fine.report(Region::Parabolic).latest().coefficients[0],
        ),
        ("intermediate_deviation", latest(coarse, Region::Intermediate), latest(&fine, Region::Intermediate)),
        ("tip_deviation", latest(coarse, Region::Tip), latest(&fine, Region::Tip)),
        ("width_deviation", latest(coarse, Region::Width), latest(&fine, Region::Width)),
        ("tip_curvature_ratio", width_coefficients(coarse)[1], width_coefficients(&fine)[1]),
    ];
    let drifts: Vec<(&str, f64)> = pairs.iter().map(|(n, a, b)| (*n, rel(*b, *a))).collect();
    let ok = identical && drifts.iter().all(|(_, d)| *d < 0.01);
    let listed = drifts.iter().map(|(n, d)| format!("{n} {:.2}%", 100.0 * d)).collect::<Vec<_>>().join(", ");
    let text = format!(
        "determinism: reruns identical {identical}; relative drift under doubling (radial ell 4 at {} -> {} nodes, aniso {} -> {} cells): {listed} (< 1%)",
        coarse.settings.nodes, fine_settings.nodes, 32, 64
    );
    Ok(line(12, ok, text))
}

fn guarded(id: usize, f: impl FnOnce() -> Res<Line>) -> Line {
    f().unwrap_or_else(|e| line(id, false, format!("error: {e}")))
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    let sphere = match c1() {
        Ok((l, d)) => {
            lines.push(l);
            d
        }
        Err(e) => {
            lines.push(line(1, false, format!("error: {e}")));
            Vec::new()
        }
    };
    lines.push(guarded(2, c2));
    match Family::run() {
        Ok(f) => {
            lines.extend([c3(&f), c4(&f), c5(&f)]);
            lines.push(guarded(6, || c6(&f)));
            lines.extend([c7(&f), c8(&f)]);
            lines.push(guarded(9, c9));
            match ratio_study() {
                Ok(r) => {
                    lines.push(c10(&r));
                    lines.push(guarded(11, || c11(&r, &sphere)));
                    lines.push(guarded(12, || c12(&f, &r)));
                }
                Err(e) => lines.extend([10, 11, 12].map(|id| line(id, false, format!("error: {e}")))),
            }
        }
        Err(e) => {
            lines.extend((3..=8).map(|id| line(id, false, format!("error: {e}"))));
            lines.push(guarded(9, c9));
        }
    }
    lines.sort_by_key(|l| l.id);
    for l in &lines {
        println!("{} criterion {:>2}: {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.text);
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
