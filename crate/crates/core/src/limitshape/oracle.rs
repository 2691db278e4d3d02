//! Closed-form arctic boundary at q = 0.

use crate::error::{Error, Result};

/// f₀(u) = u(u − b − c)/((u + a)(u − b)) and its derivative.
fn f0(a: f64, b: f64, c: f64, u: f64) -> (f64, f64) {
    let num = u * (u - b - c);
    let den = (u + a) * (u - b);
    let dnum = 2.0 * u - b - c;
    let dden = 2.0 * u + a - b;
    (num / den, (dnum * den - num * dden) / (den * den))
}

/// Point (x, γ) of the lower arctic arc at q = 0, parametrised by t.
/// t = 0 gives the bottom tangency, t = ab/(a+c) the left one, and
/// t → −∞ runs out to the right one.
pub fn q0_ellipse_point(a: f64, b: f64, c: f64, t: f64) -> Result<(f64, f64)> {
    let top = a * b / (a + c);
    if !t.is_finite() || t > top + 1e-15 {
        return Err(Error::Invalid(format!("parameter {t} outside (-inf, {top}]")));
    }
    let x = if (t + a).abs() < 1e-12 {
        // removable pole of f₀: the lower-right tangency
        a * (a + b + c) / (a + b)
    } else {
        let (f, df) = f0(a, b, c, t);
        if df == 0.0 || !df.is_finite() {
            return Err(Error::Invalid(format!("degenerate parameter {t}")));
        }
        (f - 1.0).powi(2) / df
    };
    let gamma = c * (a + b + c) * t * t / (c * t * t + a * (b * b + b * (c - 2.0 * t) + t * t));
    Ok((x, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_hexagon_closed_forms() {
        for t in [-3.0, -1.0, -0.3, 0.0, 0.2, 0.5] {
            let (x, g) = q0_ellipse_point(1.0, 1.0, 1.0, t).unwrap();
            let den = 2.0 * (t * t - t + 1.0);
            assert!((x - (1.0 - 2.0 * t).powi(2) / den).abs() < 1e-14);
            assert!((g - 3.0 * t * t / den).abs() < 1e-14);
        }
        assert_eq!(q0_ellipse_point(1.0, 1.0, 1.0, 0.0).unwrap(), (0.5, 0.0));
        assert!(q0_ellipse_point(1.0, 1.0, 1.0, 0.6).is_err());
    }
}
