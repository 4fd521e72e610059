//! Gaussian-weighted spectral analysis against the radial Ornstein-Uhlenbeck
//! operator `L = d^2/drho^2 + ((k-1)/rho - rho/2) d/drho + 1`.
//!
//! The weight `e^{-rho^2/4} rho^{k-1}` is reduced by `s = rho^2/4` to the
//! generalized Laguerre weight `s^{k/2-1} e^{-s}`, so the Gauss rule built from
//! the Laguerre three-term recurrence integrates even polynomials in `rho` of
//! degree up to `4m - 2` exactly.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ensure, Error, Result};
use crate::poly::Poly;
use crate::symmetry::SymmetryClass;

/// Largest supported quadrature size.
pub const MAX_NODES: usize = 200;

/// Gauss rule for `int_0^inf f(rho) e^{-rho^2/4} rho^{k-1} drho`.
#[derive(Debug, Clone)]
pub struct GaussianQuadrature {
    k: usize,
    rho: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianQuadrature {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        ensure(k >= 1, || format!("k must be positive, got {k}"))?;
        ensure(m >= 1, || "quadrature needs at least one node".to_string())?;
        if m > MAX_NODES {
            return Err(Error::Unsupported(format!(
                "quadrature size {m} exceeds {MAX_NODES}: recurrence breakdown"
            )));
        }
        let alpha = k as f64 / 2.0 - 1.0;
        let (s, w) = gauss_laguerre(alpha, m)?;
        let scale = 2f64.powi(k as i32 - 1);
        Ok(Self {
            k,
            rho: s.iter().map(|x| 2.0 * x.sqrt()).collect(),
            weights: w.iter().map(|x| x * scale).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rho
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (r, w) in self.rho.iter().zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            let v = f(*r);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("integrand at rho = {r}")));
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// `Gamma(alpha + 1)` for half-integer `alpha >= -1/2`.
fn gamma_half_integer(alpha: f64) -> f64 {
    let two_a = (2.0 * alpha).round() as i64;
    let mut x = alpha + 1.0;
    let mut acc = 1.0;
    let base = if two_a % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let stop = if two_a % 2 == 0 { 1.0 } else { 0.5 };
    while x > stop + 1e-12 {
        x -= 1.0;
        acc *= x;
    }
    acc * base
}

/// Nodes and weights for `int_0^inf f(s) s^alpha e^{-s} ds` (Golub-Welsch with a
/// Newton polish on the orthonormal recurrence; weights by Christoffel sums).
fn gauss_laguerre(alpha: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        jac[(i, i)] = 2.0 * i as f64 + alpha + 1.0;
        if i + 1 < m {
            let b = ((i as f64 + 1.0) * (i as f64 + 1.0 + alpha)).sqrt();
            jac[(i, i + 1)] = b;
            jac[(i + 1, i)] = b;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mu0 = gamma_half_integer(alpha);
    let mut weights = Vec::with_capacity(m);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _, _) = orthonormal_eval(alpha, m, mu0, *x);
            if dp != 0.0 && dp.is_finite() && p.is_finite() {
                *x -= p / dp;
            }
        }
        let (_, _, sumsq, log_scale) = orthonormal_eval(alpha, m, mu0, *x);
        let w = (-2.0 * log_scale).exp() / sumsq;
        if !w.is_finite() {
            return Err(Error::Unsupported("quadrature weight overflow".into()));
        }
        weights.push(w);
    }
    if nodes.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Unsupported("recurrence breakdown: non-positive node".into()));
    }
    Ok((nodes, weights))
}

/// Evaluates the orthonormal Laguerre polynomial `p_m(x)` and its derivative,
/// together with `sum_{j<m} p_j(x)^2` (all scaled by `exp(-log_scale)`).
fn orthonormal_eval(alpha: f64, m: usize, mu0: f64, x: f64) -> (f64, f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0 / mu0.sqrt();
    let mut d_prev = 0.0;
    let mut d = 0.0;
    let mut sumsq = 0.0;
    let mut log_scale = 0.0;
    for j in 0..m {
        sumsq += p * p;
        let a = 2.0 * j as f64 + alpha + 1.0;
        let b_next = ((j as f64 + 1.0) * (j as f64 + 1.0 + alpha)).sqrt();
        let b = (j as f64 * (j as f64 + alpha)).sqrt();
        let p_next = ((x - a) * p - b * p_prev) / b_next;
        let d_next = ((x - a) * d + p - b * d_prev) / b_next;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        let big = p.abs().max(p_prev.abs());
        if big > 1e150 {
            let s = 1.0 / big;
            p *= s;
            p_prev *= s;
            d *= s;
            d_prev *= s;
            sumsq *= s * s;
            log_scale += big.ln();
        }
    }
    (p, d, sumsq, log_scale)
}

/// Which mode of `L` a basis function spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Eigenvalue `+1`, the constants.
    Unstable,
    /// Eigenvalue `0`, `rho^2 - 2k`.
    Neutral,
    /// Eigenvalue `-1`, `rho^4 - (8+4k) rho^2 + (8+4k) k`.
    Stable,
}

/// Quadrature plus the normalized eigenfunctions `psi_{+1}, psi_0, psi_{-1}`.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    quad: GaussianQuadrature,
    c_plus: f64,
    c_zero: f64,
    c_minus: f64,
}

impl SpectralFrame {
    pub fn build(k: usize, m: usize) -> Result<Self> {
        ensure(m >= 8, || format!("spectral frame needs m >= 8, got {m}"))?;
        let quad = GaussianQuadrature::new(k, m)?;
        let mut frame = Self { quad, c_plus: 1.0, c_zero: 1.0, c_minus: 1.0 };
        let norm = |p: &Poly, f: &Self| -> Result<f64> { Ok(f.inner_poly(p, p)?.sqrt()) };
        frame.c_plus = 1.0 / norm(&frame.raw(Mode::Unstable), &frame)?;
        frame.c_zero = 1.0 / norm(&frame.raw(Mode::Neutral), &frame)?;
        frame.c_minus = 1.0 / norm(&frame.raw(Mode::Stable), &frame)?;
        Ok(frame)
    }

    pub fn k(&self) -> usize {
        self.quad.k
    }

    pub fn quadrature(&self) -> &GaussianQuadrature {
        &self.quad
    }

    /// Unnormalized eigenfunction of the requested mode.
    pub fn raw(&self, mode: Mode) -> Poly {
        let k = self.quad.k as f64;
        match mode {
            Mode::Unstable => Poly::constant(1.0),
            Mode::Neutral => Poly::new(vec![-2.0 * k, 0.0, 1.0]),
            Mode::Stable => Poly::new(vec![(8.0 + 4.0 * k) * k, 0.0, -(8.0 + 4.0 * k), 0.0, 1.0]),
        }
    }

    pub fn constant(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Unstable => self.c_plus,
            Mode::Neutral => self.c_zero,
            Mode::Stable => self.c_minus,
        }
    }

    /// Normalized eigenfunction `psi` of the requested mode.
    pub fn psi(&self, mode: Mode) -> Poly {
        self.raw(mode).scale(self.constant(mode))
    }

    pub fn inner(&self, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        self.quad.integrate(|r| f(r) * g(r))
    }

    pub fn inner_poly(&self, f: &Poly, g: &Poly) -> Result<f64> {
        self.inner(|r| f.eval(r), |r| g.eval(r))
    }

    pub fn norm(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        Ok(self.quad.integrate(|r| {
            let v = f(r);
            v * v
        })?
        .sqrt())
    }

    /// `c = <psi_0^2, psi_0> / (2 sqrt(2(n-k)))`, the neutral-mode ODE constant.
    pub fn mode_constant(&self, sym: SymmetryClass) -> Result<f64> {
        let psi0 = self.psi(Mode::Neutral);
        let cube = self.inner_poly(&(&psi0 * &psi0), &psi0)?;
        Ok(cube / (2.0 * sym.cylinder_radius()))
    }
}

/// Applies `L` to a polynomial exactly. Requires `p'(0) = 0` so that the
/// `(k-1)/rho` term stays polynomial (even extension).
pub fn apply_l_poly(p: &Poly, k: usize) -> Result<Poly> {
    if p.coeff(1) != 0.0 {
        return Err(Error::InvalidParameter(
            "polynomial path needs a vanishing linear coefficient".into(),
        ));
    }
    let dp = p.derivative();
    let d2p = dp.derivative();
    let dp_over_rho = Poly::new(dp.coeffs().iter().skip(1).copied().collect());
    let drift = dp.shift_up(1).scale(-0.5);
    Ok(&(&(&d2p + &dp_over_rho.scale(k as f64 - 1.0)) + &drift) + p)
}

/// Applies `L` to samples on an increasing grid starting at `rho = 0` by
/// three-point finite differences; the origin uses the even-extension limit
/// `(k-1) f'/rho -> (k-1) f''(0)`.
pub fn apply_l_sampled(rho: &[f64], f: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = rho.len();
    if n < 5 || f.len() != n {
        return Err(Error::InvalidParameter(format!(
            "sampled operator needs at least 5 matching samples, got {n}"
        )));
    }
    if rho[0] != 0.0 || rho.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "sample grid must start at 0 and increase strictly".into(),
        ));
    }
    let km1 = k as f64 - 1.0;
    let mut out = vec![0.0; n];
    let h = rho[1];
    let f2_0 = 2.0 * (f[1] - f[0]) / (h * h);
    out[0] = f2_0 + km1 * f2_0 + f[0];
    let derivs = |i0: usize, x: f64| -> (f64, f64) {
        let (x0, x1, x2) = (rho[i0], rho[i0 + 1], rho[i0 + 2]);
        let (f0, f1, f2) = (f[i0], f[i0 + 1], f[i0 + 2]);
        let d0 = (x0 - x1) * (x0 - x2);
        let d1 = (x1 - x0) * (x1 - x2);
        let d2 = (x2 - x0) * (x2 - x1);
        let first = f0 * (2.0 * x - x1 - x2) / d0
            + f1 * (2.0 * x - x0 - x2) / d1
            + f2 * (2.0 * x - x0 - x1) / d2;
        let second = 2.0 * (f0 / d0 + f1 / d1 + f2 / d2);
        (first, second)
    };
    for i in 1..n {
        let i0 = if i == n - 1 { n - 3 } else { i - 1 };
        let (d1, d2) = derivs(i0, rho[i]);
        out[i] = d2 + (km1 / rho[i] - rho[i] / 2.0) * d1 + f[i];
    }
    Ok(out)
}

/// The fixed `C^2` cutoff: 1 on `[0,1]`, 0 on `[2, inf)`, quintic smoothstep between.
pub fn cutoff(x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let t = x - 1.0;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Result of projecting a truncated profile onto the three leading modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub a_plus: f64,
    pub a_zero: f64,
    pub a_minus: f64,
    pub residual: f64,
}

/// Projects `v_hat = (u - sqrt(2(n-k))) * cutoff(rho / rho_cut)` onto the basis.
///
/// `profile` must be defined on `[0, coverage]` with `coverage >= 2 rho_cut`.
pub fn project_truncated(
    profile: impl Fn(f64) -> f64,
    coverage: f64,
    rho_cut: f64,
    sym: SymmetryClass,
    frame: &SpectralFrame,
) -> Result<Projection> {
    ensure(rho_cut > 0.0, || format!("rho_cut must be positive, got {rho_cut}"))?;
    if coverage < 2.0 * rho_cut {
        return Err(Error::Coverage(format!(
            "profile covers [0, {coverage}] but the cutoff needs [0, {}]",
            2.0 * rho_cut
        )));
    }
    let cyl = sym.cylinder_radius();
    let vhat = |r: f64| {
        let c = cutoff(r / rho_cut);
        if c == 0.0 {
            0.0
        } else {
            (profile(r) - cyl) * c
        }
    };
    let coef = |mode: Mode| {
        let psi = frame.psi(mode);
        frame.inner(&vhat, |r| psi.eval(r))
    };
    let a_plus = coef(Mode::Unstable)?;
    let a_zero = coef(Mode::Neutral)?;
    let a_minus = coef(Mode::Stable)?;
    let total = frame.norm(&vhat)?;
    let residual = (total * total - a_plus * a_plus - a_zero * a_zero - a_minus * a_minus)
        .max(0.0)
        .sqrt();
    Ok(Projection { a_plus, a_zero, a_minus, residual })
}

/// Predicted neutral-mode coefficient `-1/(c |tau|)`.
pub fn alpha0_prediction(tau: f64, sym: SymmetryClass, frame: &SpectralFrame) -> Result<f64> {
    if !(tau < 0.0) {
        return Err(Error::InvalidParameter(format!("prediction needs tau < 0, got {tau}")));
    }
    let c = frame.mode_constant(sym)?;
    Ok(-1.0 / (c * tau.abs()))
}

/// Cutoff radius schedule: `min(sqrt|tau|/2, largest rho with u >= theta)`,
/// `theta = 0.3 sqrt(2(n-k))`.
pub fn rho_cut_schedule(tau_abs: f64, rho_theta: f64) -> f64 {
    (tau_abs.sqrt() / 2.0).min(rho_theta)
}

/// Time series of the neutral coefficient against its predicted law.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeTrace {
    pub taus: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub predicted: Vec<f64>,
    pub residual: Vec<f64>,
    pub c: f64,
}

impl ModeTrace {
    pub fn new(c: f64) -> Self {
        Self { c, ..Default::default() }
    }

    pub fn push(&mut self, tau: f64, proj: &Projection) {
        self.taus.push(tau);
        self.alpha0.push(proj.a_zero);
        self.predicted.push(-1.0 / (self.c * tau.abs()));
        self.residual.push(proj.residual);
    }

    /// Relative mismatch `|alpha0 / predicted - 1|` at each sample.
    pub fn relative_mismatch(&self) -> Vec<f64> {
        self.alpha0.iter().zip(&self.predicted).map(|(a, p)| (a / p - 1.0).abs()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,alpha0,predicted,residual_norm\n");
        for i in 0..self.taus.len() {
            s.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.taus[i], self.alpha0[i], self.predicted[i], self.residual[i]
            ));
        }
        s
    }
}
