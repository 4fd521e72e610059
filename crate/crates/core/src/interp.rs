//! Monotone piecewise cubic Hermite interpolation (Fritsch-Carlson slopes).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// Builds the interpolant with one-sided three-point end slopes.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::with_end_slopes(x, y, None, None)
    }

    /// Builds the interpolant, optionally pinning the slopes at either end.
    pub fn with_end_slopes(
        x: Vec<f64>,
        y: Vec<f64>,
        start: Option<f64>,
        end: Option<f64>,
    ) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidParameter(format!(
                "pchip needs matching abscissae and values (got {} and {})",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "pchip abscissae must be strictly increasing".into(),
            ));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                let (a, b) = (delta[i - 1], delta[i]);
                if a * b <= 0.0 {
                    d[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / a + w2 / b);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        if let Some(s) = start {
            d[0] = s;
        }
        if let Some(s) = end {
            d[n - 1] = s;
        }
        Ok(Self { x, y, d })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value at `t`; outside the data range the end cubic is extrapolated.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * s * s - 2.0 * s;
        (dh00 * self.y[i] + dh01 * self.y[i + 1]) / h + dh10 * self.d[i] + dh11 * self.d[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d * m0 <= 0.0 {
        0.0
    } else if m0 * m1 <= 0.0 && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
