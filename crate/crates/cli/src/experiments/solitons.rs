use ovals_core::asymptotics::{verify_tip, RegionParams};
use ovals_core::radial_flow::TipZoom;
use ovals_core::soliton_atlas::{
    bowl_solve, foliation_divergence, shrinker_shoot, sign_report_csv, tail_shrinker_shoot, BowlProfile,
    FoliationLeaf,
};

use crate::config::{Kind, Param, Point};
use crate::error::CliError;
use crate::record::{Check, Outcome};
use crate::registry::Experiment;

use super::{symmetry, SYMMETRY_PARAMS};

const ATLAS_PARAMS: &[Param] = &[
    Param::new("d", Kind::Count, "3", "dimension of the compact and tail shrinker profiles"),
    Param::new("a", Kind::Positive, "10", "tip parameter of the compact shrinker").sweep(),
    Param::new("b", Kind::Positive, "0.1", "asymptotic slope of the tail shrinker").sweep(),
    Param::new("r_max", Kind::Positive, "200", "outer radius of the tail shrinker"),
    Param::new("shoot_tol", Kind::Positive, "1e-10", "shooting tolerance"),
    Param::new("bowl_d", Kind::Count, "2", "bowl dimension n+1-k"),
    Param::new("bowl_speed", Kind::Positive, "0.7071067811865476", "bowl translation speed"),
    Param::new("bowl_s_max", Kind::Positive, "50", "bowl range"),
    Param::new("samples", Kind::Count, "200", "rows per profile CSV"),
];

/// `Z(s)` of the bowl on the zoom grid, shaped like a tip zoom.
pub fn bowl_as_zoom(bowl: &BowlProfile, s_max: f64, ds: f64) -> Result<TipZoom, CliError> {
    let n = (s_max / ds).round() as usize;
    let s: Vec<f64> = (0..=n).map(|i| s_max * i as f64 / n as f64).collect();
    let z = s.iter().map(|&x| bowl.z(x)).collect::<Result<Vec<_>, _>>()?;
    Ok(TipZoom { s, z, tau: -1.0 })
}

fn bowl_checks(bowl: &BowlProfile, o: &mut Outcome) -> Result<(), CliError> {
    let series = bowl.series_second_derivative();
    let numeric = bowl.numerical_second_derivative();
    o.metric("bowl_z2_series", series);
    o.metric("bowl_z2_numeric", numeric);
    o.check(Check::at_most("bowl_series_match", (series - numeric).abs(), 1e-6));
    let mut residual: f64 = 0.0;
    for i in 1..100 {
        let s = bowl.s_max * i as f64 / 100.0;
        residual = residual.max(bowl.translator_residual(s)?.abs());
    }
    o.check(Check::at_most("bowl_translator_residual", residual, 1e-6));
    let params = RegionParams::default();
    let zoom = bowl_as_zoom(bowl, params.s_max, params.step)?;
    let report = verify_tip(&[zoom], bowl, &params)?;
    o.check(Check::at_most("bowl_tip_self_test", report.latest().deviation, 1e-9));
    Ok(())
}

pub struct SolitonAtlas;

impl Experiment for SolitonAtlas {
    fn tag(&self) -> &'static str {
        "soliton-atlas"
    }

    fn describe(&self) -> &'static str {
        "compact and tail shrinker profiles and the bowl soliton"
    }

    fn params(&self) -> &'static [Param] {
        ATLAS_PARAMS
    }

    fn validate(&self, p: &Point) -> Result<(), CliError> {
        if p.usize("d") < 2 || p.usize("bowl_d") < 2 {
            return Err(CliError::Validation("`d` and `bowl_d` must be at least 2".into()));
        }
        if p.f64("a") < 2.0 {
            return Err(CliError::Validation(format!("`a` must be at least 2, got {}", p.f64("a"))));
        }
        if p.f64("b") > 1.0 || p.f64("r_max") < 20.0 {
            return Err(CliError::Validation("need `b` <= 1 and `r_max` >= 20".into()));
        }
        if p.usize("samples") < 2 {
            return Err(CliError::Validation("`samples` must be at least 2".into()));
        }
        Ok(())
    }

    fn run(&self, p: &Point) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        let (d, a, b) = (p.usize("d"), p.f64("a"), p.f64("b"));
        let count = p.usize("samples");
        let cyl = (2.0 * (d as f64 - 1.0)).sqrt();

        let shrinker = shrinker_shoot(a, d, p.f64("shoot_tol"))?;
        o.metric("shrinker_u0", shrinker.u0());
        o.metric("shrinker_u0_over_cylinder", shrinker.u0() / cyl);
        o.check(Check::at_most("shrinker_tip_value", shrinker.u_at(a)?.abs(), 1e-12));
        let mut excess = f64::NEG_INFINITY;
        for i in 0..=count {
            let r = 0.5 * a * i as f64 / count as f64;
            let bound = cyl * (1.0 - (r * r - 3.0) / (2.0 * a * a));
            excess = excess.max(shrinker.u_at(r)? - bound);
        }
        o.check(Check::at_most("shrinker_bound_excess", excess, 0.0));
        o.artifact("shrinker.csv", shrinker.to_csv(count));

        let tail = tail_shrinker_shoot(b, d, p.f64("r_max"))?;
        o.metric("tail_end_slope", tail.end_slope());
        o.metric("tail_u_at_1", tail.u_at(1.0)?);
        o.check(Check::at_most("tail_slope_error", (tail.end_slope() / b - 1.0).abs(), 0.02));
        o.check(Check::at_least("tail_min_second_derivative", tail.min_second_derivative(1.0), -1e-8));
        o.artifact("tail.csv", tail.to_csv(count));

        let bowl = bowl_solve(p.usize("bowl_d"), p.f64("bowl_speed"), p.f64("bowl_s_max"))?;
        bowl_checks(&bowl, &mut o)?;
        let ds = bowl.s_max / count as f64;
        o.artifact("bowl.csv", bowl.to_csv(ds));
        Ok(o)
    }

    fn verify(&self) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        let bowl = bowl_solve(2, std::f64::consts::FRAC_1_SQRT_2, 10.0)?;
        bowl_checks(&bowl, &mut o)?;
        let shrinker = shrinker_shoot(10.0, 3, 1e-10)?;
        o.check(Check::at_most("shrinker_tip_value", shrinker.u_at(10.0)?.abs(), 1e-12));
        Ok(o)
    }
}

const FOLIATION_PARAMS: &[Param] = &[
    SYMMETRY_PARAMS[0],
    SYMMETRY_PARAMS[1],
    Param::new("leaf", Kind::Choice(&["compact", "tail", "cylinder"]), "compact, tail, cylinder", "leaf family")
        .sweep(),
    Param::new("a", Kind::Positive, "12", "tip parameter of the compact leaf"),
    Param::new("b", Kind::Positive, "0.2", "asymptotic slope of the tail leaf"),
    Param::new("eta", Kind::Positive, "1", "shift along the long axes"),
    Param::new("y1_min", Kind::Positive, "2", "smallest sampled y1"),
    Param::new("r_max", Kind::Positive, "200", "outer radius of the tail leaf"),
    Param::new("samples", Kind::Count, "200", "sample points per leaf"),
    Param::new("sign_tol", Kind::Positive, "1e-8", "slack allowed in the sign test"),
];

pub struct FoliationCheck;

impl FoliationCheck {
    fn leaf(p: &Point) -> Result<FoliationLeaf, CliError> {
        let d = symmetry(p)?.tip_dimension();
        Ok(match p.word("leaf") {
            "compact" => FoliationLeaf::Compact { profile: shrinker_shoot(p.f64("a"), d, 1e-10)?, eta: p.f64("eta") },
            "tail" => FoliationLeaf::Tail { profile: tail_shrinker_shoot(p.f64("b"), d, p.f64("r_max"))?, eta: p.f64("eta") },
            _ => FoliationLeaf::Cylinder,
        })
    }
}

impl Experiment for FoliationCheck {
    fn tag(&self) -> &'static str {
        "foliation-check"
    }

    fn describe(&self) -> &'static str {
        "sign of H - <y, nu>/2 along shifted shrinker leaves"
    }

    fn params(&self) -> &'static [Param] {
        FOLIATION_PARAMS
    }

    fn validate(&self, p: &Point) -> Result<(), CliError> {
        let sym = symmetry(p)?;
        let need = 2.0 * (sym.k() as f64 - 1.0) / p.f64("eta");
        if p.f64("y1_min") < need {
            return Err(CliError::Validation(format!("`y1_min` must be at least 2(k-1)/eta = {need}")));
        }
        if p.usize("samples") < 2 {
            return Err(CliError::Validation("`samples` must be at least 2".into()));
        }
        Ok(())
    }

    fn run(&self, p: &Point) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        let sym = symmetry(p)?;
        let values = foliation_divergence(&Self::leaf(p)?, sym, p.f64("y1_min"), p.usize("samples"))?;
        let max = values.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
        let tol = p.f64("sign_tol");
        o.metric("samples", values.len() as f64);
        o.metric("value_max", max);
        o.metric("value_min", min);
        match p.word("leaf") {
            "compact" => o.check(Check::at_most("compact_leaf_nonpositive", max, tol)),
            "tail" => o.check(Check::at_least("tail_leaf_nonnegative", min, -tol)),
            _ => o.check(Check::at_most("cylinder_leaf_zero", max.abs().max(min.abs()), tol)),
        }
        o.artifact("signs.csv", sign_report_csv(&values));
        Ok(o)
    }

    fn verify(&self) -> Result<Outcome, CliError> {
        let mut o = Outcome::default();
        let sym = ovals_core::SymmetryClass::new(3, 2)?;
        let v = foliation_divergence(&FoliationLeaf::Cylinder, sym, 2.0, 50)?;
        let worst = v.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
        o.check(Check::at_most("cylinder_leaf_zero", worst, 1e-12));
        Ok(o)
    }
}
