//! Adaptive Dormand-Prince 5(4) integrator with a recorded trajectory.

use crate::error::{Error, Result};

/// One accepted point of a trajectory: abscissa, state, and state derivative.
#[derive(Debug, Clone)]
pub struct OdePoint<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub f: [f64; N],
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_step: f64::INFINITY, max_steps: 2_000_000 }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` towards `t1` (either direction).
///
/// Every accepted step is recorded. Integration stops early at the first
/// accepted point where `stop` returns true, or with an error when `f`
/// produces non-finite values.
pub fn integrate<const N: usize, F, S>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerance,
    mut stop: S,
) -> Result<Vec<OdePoint<N>>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> bool,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut out = vec![OdePoint { t, y, f: k1 }];
    if span == 0.0 {
        return Ok(out);
    }
    let mut h = (span * 1e-3).min(tol.max_step).max(1e-14 * span);
    let mut steps = 0usize;
    while (t1 - t) * dir > 1e-14 * span.max(1.0) {
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::Integration(format!("step budget exhausted at t = {t}")));
        }
        h = h.min((t1 - t).abs()).min(tol.max_step);
        let hs = h * dir;
        let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + hs, &y_new);
        let finite = y_new.iter().chain(k7.iter()).all(|v| v.is_finite());
        let mut err = 0.0f64;
        if finite {
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
        } else {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            t += hs;
            y = y_new;
            k1 = k7;
            out.push(OdePoint { t, y, f: k1 });
            if stop(t, &y) {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            if h < 1e-15 * span.max(1.0) {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {t} (solution blows up or is non-finite)"
                )));
            }
        }
    }
    Ok(out)
}

/// Cubic Hermite evaluation of a recorded trajectory at `t` (component `c`).
///
/// Returns `(value, derivative)`; `None` when `t` is outside the trajectory.
pub fn hermite<const N: usize>(traj: &[OdePoint<N>], t: f64, c: usize) -> Option<(f64, f64)> {
    let n = traj.len();
    if n < 2 {
        return None;
    }
    let increasing = traj[n - 1].t > traj[0].t;
    let key = |p: &OdePoint<N>| if increasing { p.t } else { -p.t };
    let tk = if increasing { t } else { -t };
    if tk < key(&traj[0]) - 1e-14 || tk > key(&traj[n - 1]) + 1e-14 {
        return None;
    }
    let idx = traj.partition_point(|p| key(p) <= tk);
    let i = idx.clamp(1, n - 1) - 1;
    let (a, b) = (&traj[i], &traj[i + 1]);
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let v = h00 * a.y[c] + h10 * h * a.f[c] + h01 * b.y[c] + h11 * h * b.f[c];
    let dh00 = 6.0 * s * s - 6.0 * s;
    let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
    let dh11 = 3.0 * s * s - 2.0 * s;
    let d = (dh00 * a.y[c] - dh00 * b.y[c]) / h + dh10 * a.f[c] + dh11 * b.f[c];
    Some((v, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let traj = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            Tolerance::new(1e-11),
            |_, _| false,
        )
        .unwrap();
        let last = traj.last().unwrap();
        assert!((last.y[0] - 1.0).abs() < 1e-9);
        assert!(last.y[1].abs() < 1e-9);
        let (v, d) = hermite(&traj, 1.0, 0).unwrap();
        assert!((v - 1f64.cos()).abs() < 1e-7);
        assert!((d + 1f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn backward_and_stop() {
        let traj = integrate(
            |_, y: &[f64; 1]| [y[0]],
            1.0,
            [1.0],
            0.0,
            Tolerance::new(1e-10),
            |_, _| false,
        )
        .unwrap();
        assert!((traj.last().unwrap().y[0] - (-1f64).exp()).abs() < 1e-9);
        let early = integrate(
            |_, _y: &[f64; 1]| [1.0],
            0.0,
            [0.0],
            10.0,
            Tolerance::new(1e-10).with_max_step(0.1),
            |_, y| y[0] > 1.0,
        )
        .unwrap();
        assert!(early.last().unwrap().t < 1.5);
    }

    #[test]
    fn blow_up_reported() {
        let r = integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            Tolerance::new(1e-8),
            |_, _| false,
        );
        assert!(r.is_err());
    }
}
