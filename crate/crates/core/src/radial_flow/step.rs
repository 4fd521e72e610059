use crate::error::{Error, Result};

use super::curve::{monotonicity_violation, QuotientCurve};
use super::velocity::kernel;

/// Explicit Heun stepping with a diffusive step bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub c_cfl: f64,
    pub max_rejections: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { c_cfl: 0.2, max_rejections: 40 }
    }
}

impl StepPolicy {
    /// `c_cfl h_min^2` divided by the largest axis multiplicity.
    pub fn dt(&self, c: &QuotientCurve) -> f64 {
        let sym = c.sym();
        let mult = (sym.k() as f64).max(sym.fiber() as f64 + 1.0);
        let h = c.min_spacing();
        self.c_cfl * h * h / mult
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub rejections: usize,
}

/// Reusable buffers for the stepping kernel.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    curv: Vec<f64>,
    normal: Vec<[f64; 2]>,
    speed: Vec<f64>,
    f0: Vec<[f64; 2]>,
    stage: Vec<[f64; 2]>,
}

impl Workspace {
    fn resize(&mut self, n: usize) {
        self.curv.resize(n, 0.0);
        self.normal.resize(n, [0.0; 2]);
        self.speed.resize(n, 0.0);
        self.f0.resize(n, [0.0; 2]);
        self.stage.resize(n, [0.0; 2]);
    }
}

fn displacement(
    p: &[[f64; 2]],
    c: &QuotientCurve,
    ws_curv: &mut [f64],
    ws_normal: &mut [[f64; 2]],
    ws_speed: &mut [f64],
    out: &mut [[f64; 2]],
) -> Result<()> {
    let renorm = c.frame() == super::curve::Frame::Renormalized;
    kernel(p, c.sym(), renorm, ws_curv, ws_normal, ws_speed)?;
    let m = p.len() - 1;
    out[0] = [0.0, -ws_speed[0]];
    out[m] = [-ws_speed[m], 0.0];
    for i in 1..m {
        out[i] = [-ws_speed[i] * ws_normal[i][0], -ws_speed[i] * ws_normal[i][1]];
    }
    Ok(())
}

/// Advances the curve in place by one accepted step of size at most `dt_max`
/// (the policy bound if `None`), halving on invariant violations.
pub fn step_flow_in_place(
    c: &mut QuotientCurve,
    policy: &StepPolicy,
    dt_max: Option<f64>,
    ws: &mut Workspace,
) -> Result<StepInfo> {
    let n = c.len();
    ws.resize(n);
    let mut dt = policy.dt(c);
    if let Some(cap) = dt_max {
        dt = dt.min(cap);
    }
    {
        let Workspace { curv, normal, speed, f0, .. } = ws;
        displacement(c.nodes(), c, curv, normal, speed, f0)?;
    }
    let mut rejections = 0;
    let mut last_reason: String;
    loop {
        let attempt = (|| -> Result<Vec<[f64; 2]>> {
            let Workspace { curv, normal, speed, f0, stage } = &mut *ws;
            let p = c.nodes();
            for i in 0..n {
                stage[i] = [p[i][0] + dt * f0[i][0], p[i][1] + dt * f0[i][1]];
            }
            if let Some(i) = monotonicity_violation(stage) {
                return Err(Error::DegenerateGeometry(format!("stage ordering lost at {i}")));
            }
            let mut f1 = vec![[0.0; 2]; n];
            displacement(stage, c, curv, normal, speed, &mut f1)?;
            let half = 0.5 * dt;
            let out: Vec<[f64; 2]> = (0..n)
                .map(|i| {
                    [
                        p[i][0] + half * (f0[i][0] + f1[i][0]),
                        p[i][1] + half * (f0[i][1] + f1[i][1]),
                    ]
                })
                .collect();
            Ok(out)
        })();
        match attempt {
            Ok(mut out) => {
                let m = n - 1;
                out[0][0] = 0.0;
                out[m][1] = 0.0;
                let ok = out.iter().all(|q| q[0].is_finite() && q[1].is_finite())
                    && out[0][1] > 0.0
                    && out[m][0] > 0.0
                    && monotonicity_violation(&out).is_none();
                if ok {
                    *c.nodes_mut() = out;
                    c.set_t(c.t() + dt);
                    return Ok(StepInfo { dt, rejections });
                }
                last_reason = "invariant violated after step".into();
            }
            Err(e) => last_reason = e.to_string(),
        }
        rejections += 1;
        if rejections >= policy.max_rejections {
            return Err(Error::StepRejected { attempts: rejections, t: c.t(), reason: last_reason });
        }
        dt *= 0.5;
    }
}

/// Functional form of [`step_flow_in_place`].
pub fn step_flow(c: &QuotientCurve, policy: &StepPolicy) -> Result<(QuotientCurve, StepInfo)> {
    let mut next = c.clone();
    let info = step_flow_in_place(&mut next, policy, None, &mut Workspace::default())?;
    Ok((next, info))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_flow::curve::Frame;
    use crate::symmetry::SymmetryClass;

    #[test]
    fn symmetric_data_stays_symmetric() {
        let sym = SymmetryClass::new(3, 2).unwrap();
        let c0 = QuotientCurve::from_parametric(
            |t| {
                if t == 0.0 {
                    return [0.0, 1.0];
                }
                if t == std::f64::consts::FRAC_PI_2 {
                    return [1.0, 0.0];
                }
                let (s, c) = t.sin_cos();
                let rad = (s.powi(4) + c.powi(4)).powf(-0.25);
                [rad * s, rad * c]
            },
            std::f64::consts::FRAC_PI_2,
            sym,
            60,
            0.0,
        )
        .unwrap();
        // enforce exact mirror data
        let mut nodes = c0.nodes().to_vec();
        let m = nodes.len() - 1;
        for i in 0..=m / 2 {
            let p = nodes[i];
            nodes[m - i] = [p[1], p[0]];
        }
        let mut c = QuotientCurve::new(nodes, 0.0, Frame::Unrescaled, sym).unwrap();
        let mut ws = Workspace::default();
        for _ in 0..300 {
            step_flow_in_place(&mut c, &StepPolicy::default(), None, &mut ws).unwrap();
        }
        let p = c.nodes();
        for i in 0..=m {
            assert_eq!(p[i][0], p[m - i][1]);
            assert_eq!(p[i][1], p[m - i][0]);
        }
    }

    #[test]
    fn nested_circles_stay_nested() {
        let sym = SymmetryClass::new(4, 2).unwrap();
        let mut inner = QuotientCurve::quarter_circle(1.0, sym, 40).unwrap();
        let mut outer = QuotientCurve::ellipsoid(0.7, sym, 40).unwrap();
        let (mut wi, mut wo) = (Workspace::default(), Workspace::default());
        let pol = StepPolicy::default();
        for _ in 0..2000 {
            let dt = pol.dt(&inner).min(pol.dt(&outer));
            step_flow_in_place(&mut inner, &pol, Some(dt), &mut wi).unwrap();
            step_flow_in_place(&mut outer, &pol, Some(dt), &mut wo).unwrap();
            let rin = inner.nodes()[0][1];
            for q in outer.nodes() {
                assert!(q[0].hypot(q[1]) > rin);
            }
        }
    }
}
