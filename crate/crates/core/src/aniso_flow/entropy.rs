use crate::error::{Error, Result};

/// Area of the unit `j`-sphere, from `|S^j| = 2 pi |S^{j-2}| / (j - 1)`.
pub fn sphere_area(j: usize) -> f64 {
    match j {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * sphere_area(j - 2) / (j as f64 - 1.0),
    }
}

/// Gaussian density of the self-similarly shrinking round `j`-sphere,
/// `|S^j| (j / (2 pi e))^{j/2}`.
pub fn sphere_entropy(j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("sphere entropy needs j >= 1".into()));
    }
    let jf = j as f64;
    Ok(sphere_area(j) * (jf / (2.0 * std::f64::consts::PI * std::f64::consts::E)).powf(0.5 * jf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_dimensional_values() {
        assert!((sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
        let e = std::f64::consts::E;
        let s1 = (2.0 * std::f64::consts::PI / e).sqrt();
        assert!((sphere_entropy(1).unwrap() - s1).abs() < 1e-14);
        assert!((sphere_entropy(2).unwrap() - 4.0 / e).abs() < 1e-14);
        assert!(sphere_entropy(0).is_err());
    }

    #[test]
    fn decreasing_in_dimension() {
        let v: Vec<f64> = (1..=6).map(|j| sphere_entropy(j).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }
}
