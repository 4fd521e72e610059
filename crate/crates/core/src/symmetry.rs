use crate::error::{ensure, Result};

/// The pair `(n, k)`: hypersurface dimension and number of long axes.
///
/// A symmetric hypersurface in `R^{n+1}` is described by the quotient curve in
/// the `(r, y)` quarter plane with `r = |x'|`, `x' in R^k` and `y = |x''|`,
/// `x'' in R^{n+1-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymmetryClass {
    n: usize,
    k: usize,
}

impl SymmetryClass {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        ensure(k >= 1, || format!("k must be positive, got {k}"))?;
        ensure(n >= k + 1, || format!("need n - k >= 1, got n = {n}, k = {k}"))?;
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of short (fiber) directions, `n - k`.
    pub fn fiber(&self) -> usize {
        self.n - self.k
    }

    /// Radius of the limiting cylinder `R^k x S^{n-k}` in the renormalized frame.
    pub fn cylinder_radius(&self) -> f64 {
        (2.0 * self.fiber() as f64).sqrt()
    }

    /// Dimension of the bowl soliton that models the tip, `n + 1 - k`.
    pub fn tip_dimension(&self) -> usize {
        self.n + 1 - self.k
    }
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(n={}, k={})", self.n, self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_fiber() {
        assert!(SymmetryClass::new(3, 3).is_err());
        assert!(SymmetryClass::new(3, 0).is_err());
        let s = SymmetryClass::new(3, 2).unwrap();
        assert_eq!(s.fiber(), 1);
        assert_eq!(s.tip_dimension(), 2);
        assert!((s.cylinder_radius() - 2f64.sqrt()).abs() < 1e-15);
    }
}
