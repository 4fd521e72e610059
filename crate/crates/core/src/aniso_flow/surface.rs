use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::SymmetryClass;

/// Smallest admissible grid resolution per direction.
pub const MIN_GRID: usize = 32;
/// Simplex points closer than this to the boundary are clamped.
pub const DELTA_CLAMP: f64 = 0.05;

/// Scale `ell` and simplex weight `a1` (with `a2 = 1 - a1`) of an anisotropic ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidParams {
    pub ell: f64,
    pub a1: f64,
    /// True if the requested `a1` was moved into `[DELTA_CLAMP, 1 - DELTA_CLAMP]`.
    pub clamped: bool,
}

impl EllipsoidParams {
    pub fn new(ell: f64, a1: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) || !a1.is_finite() {
            return Err(Error::InvalidParameter(format!("bad ellipsoid parameters ell={ell}, a1={a1}")));
        }
        let c = a1.clamp(DELTA_CLAMP, 1.0 - DELTA_CLAMP);
        Ok(Self { ell, a1: c, clamped: c != a1 })
    }

    pub fn a2(&self) -> f64 {
        1.0 - self.a1
    }

    /// Semi-axes of the quotient ellipsoid in `(x1, x2, |x''|)`.
    pub fn semi_axes(&self, sym: SymmetryClass) -> [f64; 3] {
        let b = (2.0 * (sym.n() as f64 - 2.0)).sqrt();
        [self.ell * b / self.a1, self.ell * b / self.a2(), b]
    }
}

/// Cell-centred quarter-sphere grid with `theta` the azimuth in the `(x1, x2)`
/// plane and `phi` the polar angle from the `x3` axis.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Grid {
    pub n: usize,
    pub h: f64,
    pub st: Vec<f64>,
    pub ct: Vec<f64>,
    pub sp: Vec<f64>,
    pub cp: Vec<f64>,
    /// Weights for `int sin(phi) cos(phi)^p G(phi) dphi` with `p = n - 2`.
    pub w_density: Vec<f64>,
    /// The same with `p = 0`.
    pub w_area: Vec<f64>,
}

impl Grid {
    fn new(n: usize, dim: usize) -> Self {
        let h = FRAC_PI_2 / n as f64;
        let s: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) * h).sin()).collect();
        // Mirrored tables keep the diagonal reflection exact.
        let c: Vec<f64> = s.iter().rev().copied().collect();
        Self {
            n,
            h,
            st: s.clone(),
            ct: c.clone(),
            sp: s,
            cp: c,
            w_density: polar_weights(n, dim - 2),
            w_area: polar_weights(n, 0),
        }
    }
}

/// `int_0^{pi/2} sin(b phi) dphi`.
fn sine_integral(b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        (1.0 - (b * FRAC_PI_2).cos()) / b
    }
}

/// `int_0^{pi/2} sin(phi) cos(phi)^p cos(2 m phi) dphi`, from the Fourier
/// expansion of `cos^p`.
fn polar_moment(p: usize, m: usize) -> f64 {
    let mut binom = 1.0;
    let mut sum = 0.0;
    for r in 0..=p {
        let alpha = p as f64 - 2.0 * r as f64;
        let beta = 2.0 * m as f64;
        // sin(phi) cos(alpha phi) cos(beta phi) as a sum of four sines.
        let parts = [1.0 + alpha + beta, 1.0 + alpha - beta, 1.0 - alpha + beta, 1.0 - alpha - beta];
        sum += binom * 0.25 * parts.iter().map(|b| sine_integral(*b)).sum::<f64>();
        binom = binom * (p - r) as f64 / (r + 1) as f64;
    }
    sum / 2f64.powi(p as i32)
}

/// Weights on the cell-centred polar grid that integrate
/// `sin(phi) cos(phi)^p G(phi)` exactly for `G` in the span of
/// `cos(2 m phi)`, `m < n`: the factor with the kinks at the pole and
/// equator is integrated analytically and `G` is smooth and even at both ends.
pub(crate) fn polar_weights(n: usize, p: usize) -> Vec<f64> {
    let moments: Vec<f64> = (0..n).map(|m| polar_moment(p, m)).collect();
    let nf = n as f64;
    (0..n)
        .map(|j| {
            let x = (j as f64 + 0.5) * std::f64::consts::PI / nf;
            moments[0] / nf
                + (1..n).map(|m| 2.0 / nf * moments[m] * (m as f64 * x).cos()).sum::<f64>()
        })
        .collect()
}

/// Quotient surface in `(x1, x2, x3 = |x''|)` written as a radial graph over a
/// stretched quarter sphere: `X = r(theta, phi) * D * s(theta, phi)` with
/// `D = diag(axes)`, so the ellipsoid with these semi-axes is `r = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSurface {
    pub(crate) grid: Grid,
    axes: [f64; 3],
    pub(crate) r: Vec<f64>,
    t: f64,
    sym: SymmetryClass,
}

fn check_sym(sym: SymmetryClass) -> Result<()> {
    if sym.k() != 2 {
        return Err(Error::Unsupported(format!("anisotropic flow needs k = 2, got {sym}")));
    }
    Ok(())
}

impl RadialSurface {
    pub fn new(axes: [f64; 3], r: Vec<f64>, grid: usize, t: f64, sym: SymmetryClass) -> Result<Self> {
        check_sym(sym)?;
        if grid < MIN_GRID {
            return Err(Error::InvalidParameter(format!("grid must be at least {MIN_GRID}, got {grid}")));
        }
        if r.len() != grid * grid {
            return Err(Error::InvalidParameter("radius array does not match the grid".into()));
        }
        if axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter(format!("bad axes {axes:?}")));
        }
        if r.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::DegenerateGeometry("radius must be positive".into()));
        }
        Ok(Self { grid: Grid::new(grid, sym.n()), axes, r, t, sym })
    }

    /// The quotient of the ellipsoid with parameters `p`.
    pub fn ellipsoid(p: &EllipsoidParams, sym: SymmetryClass, grid: usize) -> Result<Self> {
        check_sym(sym)?;
        Self::new(p.semi_axes(sym), vec![1.0; grid * grid], grid, 0.0, sym)
    }

    /// Round sphere of the given radius.
    pub fn sphere(radius: f64, sym: SymmetryClass, grid: usize) -> Result<Self> {
        Self::new([radius; 3], vec![1.0; grid * grid], grid, 0.0, sym)
    }

    pub fn grid_size(&self) -> usize {
        self.grid.n
    }

    pub fn axes(&self) -> [f64; 3] {
        self.axes
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn sym(&self) -> SymmetryClass {
        self.sym
    }

    /// Radius value at cell `(i, j)`, `i` indexing theta and `j` phi.
    pub fn radius(&self, i: usize, j: usize) -> f64 {
        self.r[j * self.grid.n + i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn angles(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.grid.h;
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    /// Stretched direction `D s` at cell `(i, j)`.
    pub(crate) fn direction(&self, i: usize, j: usize) -> [f64; 3] {
        let g = &self.grid;
        let a = self.axes;
        [a[0] * (g.sp[j] * g.ct[i]), a[1] * (g.sp[j] * g.st[i]), a[2] * g.cp[j]]
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 3] {
        let e = self.direction(i, j);
        let r = self.radius(i, j);
        [r * e[0], r * e[1], r * e[2]]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        let n = self.grid.n;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push(self.point(i, j));
            }
        }
        out
    }

    /// Radius extrapolated to a grid corner, using evenness across both edges.
    fn corner_radius(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
        let e = |a: f64, b: f64| (9.0 * a - b) / 8.0;
        let near = e(self.radius(i0, j0), self.radius(i0, j1));
        let far = e(self.radius(i1, j0), self.radius(i1, j1));
        e(near, far)
    }

    /// Maximal extents `(max x1, max x2, max x3)`, attained on the coordinate axes.
    pub fn extents(&self) -> [f64; 3] {
        let n = self.grid.n;
        let x1 = self.corner_radius(0, 1, n - 1, n - 2) * self.axes[0];
        let x2 = self.corner_radius(n - 1, n - 2, n - 1, n - 2) * self.axes[1];
        // The pole phi = 0 is a single point: average the first ring.
        let ring = |j: usize| (0..n).map(|i| self.radius(i, j)).sum::<f64>() / n as f64;
        let x3 = (9.0 * ring(0) - ring(1)) / 8.0 * self.axes[2];
        [x1, x2, x3]
    }

    /// Largest mismatch under the diagonal reflection `theta -> pi/2 - theta`.
    pub fn diagonal_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.radius(i, j) - self.radius(n - 1 - i, j)).abs());
            }
        }
        worst
    }

    /// Snapshot as `theta,phi,r` rows preceded by a commented header.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# n={}", self.sym.n());
        let _ = writeln!(s, "# k={}", self.sym.k());
        let _ = writeln!(s, "# t={:.17e}", self.t);
        let _ = writeln!(
            s,
            "# axes={:.17e},{:.17e},{:.17e}",
            self.axes[0], self.axes[1], self.axes[2]
        );
        s.push_str("theta,phi,r\n");
        for j in 0..self.grid.n {
            for i in 0..self.grid.n {
                let (th, ph) = self.angles(i, j);
                let _ = writeln!(s, "{th:.17e},{ph:.17e},{:.17e}", self.radius(i, j));
            }
        }
        s
    }
}
