//! Complex helpers shared by the propagators and the characteristic function.

use num_complex::Complex64;

pub type ComplexValue = Complex64;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Below this modulus `sin(x)/x` switches to its series.
const SINC_SERIES: f64 = 1e-8;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: Complex64) -> Complex64 {
    if x.norm() < SINC_SERIES {
        ONE - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `cos(x)·exp(-|Im x|)`, finite for every finite `x`.
pub fn cos_scaled(x: Complex64) -> Complex64 {
    let s = x.im.abs();
    let iz = Complex64::i() * x;
    ((iz - s).exp() + (-iz - s).exp()) * 0.5
}

/// `sin(x)·exp(-|Im x|)`.
pub fn sin_scaled(x: Complex64) -> Complex64 {
    let s = x.im.abs();
    let iz = Complex64::i() * x;
    ((iz - s).exp() - (-iz - s).exp()) / Complex64::new(0.0, 2.0)
}

/// `sinc(x)·exp(-|Im x|)`.
pub fn sinc_scaled(x: Complex64) -> Complex64 {
    if x.norm() < SINC_SERIES {
        (ONE - x * x / 6.0) * (-x.im.abs()).exp()
    } else {
        sin_scaled(x) / x
    }
}

/// A complex number stored as `mantissa · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl ScaledComplex {
    pub fn new(mantissa: Complex64, log_scale: f64) -> Self {
        Self {
            mantissa,
            log_scale,
        }
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// The plain value; infinite when the scale exceeds the f64 range.
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }
}

/// Parses `a+bi`, `a-bi`, `bi`, `a` and `i` literals.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx];
            if (c == b'+' || c == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                split = Some(idx);
                break;
            }
        }
        let imag = |txt: &str| -> Option<f64> {
            match txt {
                "" | "+" => Some(1.0),
                "-" => Some(-1.0),
                _ => txt.parse().ok(),
            }
        };
        match split {
            Some(idx) => {
                let re: f64 = body[..idx].parse().ok()?;
                let im = imag(&body[idx..])?;
                Some(Complex64::new(re, im))
            }
            None => Some(Complex64::new(0.0, imag(body)?)),
        }
    } else {
        t.parse().ok().map(|re| Complex64::new(re, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_trig_matches_plain_in_range() {
        for &(re, im) in &[(0.3, 0.0), (2.0, -3.5), (-7.0, 12.0), (1e-9, 1e-9)] {
            let x = Complex64::new(re, im);
            let w = (-im.abs()).exp();
            assert!((cos_scaled(x) - x.cos() * w).norm() < 1e-14 * (1.0 + x.cos().norm() * w));
            assert!((sin_scaled(x) - x.sin() * w).norm() < 1e-14 * (1.0 + x.sin().norm() * w));
            assert!((sinc_scaled(x) - sinc(x) * w).norm() < 1e-14);
        }
    }

    #[test]
    fn scaled_trig_is_finite_far_off_axis() {
        let x = Complex64::new(3.0, 5000.0);
        assert!(cos_scaled(x).is_finite());
        assert!((cos_scaled(x).norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sinc_series_branch() {
        assert_eq!(sinc(ZERO), ONE);
        let x = Complex64::new(1e-9, -2e-9);
        assert!((sinc(x) - ONE).norm() < 1e-16);
    }

    #[test]
    fn parses_complex_literals() {
        assert_eq!(parse_complex("1.5"), Some(Complex64::new(1.5, 0.0)));
        assert_eq!(parse_complex("1+2i"), Some(Complex64::new(1.0, 2.0)));
        assert_eq!(parse_complex("1.5-0.25i"), Some(Complex64::new(1.5, -0.25)));
        assert_eq!(parse_complex("-i"), Some(Complex64::new(0.0, -1.0)));
        assert_eq!(parse_complex("2i"), Some(Complex64::new(0.0, 2.0)));
        assert_eq!(parse_complex("1e-3+2e-2i"), Some(Complex64::new(1e-3, 2e-2)));
        assert_eq!(parse_complex("abc"), None);
    }
}
