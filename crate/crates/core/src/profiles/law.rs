use std::fmt;
use std::sync::Arc;

use super::mollify::Mollified;
use crate::error::{Error, Result};

/// Smooth law of one segment, evaluated in the global radius `r`.
#[derive(Clone)]
pub enum Law {
    Constant(f64),
    /// `a + b·r`
    Affine { a: f64, b: f64 },
    /// Coefficients ascending in `r`.
    Polynomial(Vec<f64>),
    /// Mollified C^{1,1} function; not representable in profile files.
    Mollified(Arc<Mollified>),
}

impl Law {
    pub fn eval(&self, r: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(match self {
            Law::Constant(c) => {
                if order == 0 {
                    *c
                } else {
                    0.0
                }
            }
            Law::Affine { a, b } => match order {
                0 => a + b * r,
                1 => *b,
                _ => 0.0,
            },
            Law::Polynomial(c) => poly_eval(c, r, order),
            Law::Mollified(m) => match order {
                0 => m.value(r),
                1 => m.derivative(r),
                _ => m.second_derivative(r),
            },
        })
    }

    /// Value only; cannot fail.
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Law::Constant(c) => *c,
            Law::Affine { a, b } => a + b * r,
            Law::Polynomial(c) => poly_eval(c, r, 0),
            Law::Mollified(m) => m.value(r),
        }
    }

    /// `Some(c)` when the law is identically the constant `c`.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Law::Constant(c) => Some(*c),
            Law::Affine { a, b } if *b == 0.0 => Some(*a),
            Law::Polynomial(c) if c.iter().skip(1).all(|v| *v == 0.0) => {
                Some(c.first().copied().unwrap_or(0.0))
            }
            _ => None,
        }
    }

    /// Ascending coefficients for the closed-form laws.
    pub fn coefficients(&self) -> Option<Vec<f64>> {
        match self {
            Law::Constant(c) => Some(vec![*c]),
            Law::Affine { a, b } => Some(vec![*a, *b]),
            Law::Polynomial(c) => Some(c.clone()),
            Law::Mollified(_) => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Law::Constant(_) => "constant",
            Law::Affine { .. } => "affine",
            Law::Polynomial(_) => "polynomial",
            Law::Mollified(_) => "mollified",
        }
    }
}

impl PartialEq for Law {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Law::Mollified(a), Law::Mollified(b)) => Arc::ptr_eq(a, b),
            (Law::Mollified(_), _) | (_, Law::Mollified(_)) => false,
            _ => {
                let mut a = self.coefficients().unwrap_or_default();
                let mut b = other.coefficients().unwrap_or_default();
                while a.len() > 1 && a.last() == Some(&0.0) {
                    a.pop();
                }
                while b.len() > 1 && b.last() == Some(&0.0) {
                    b.pop();
                }
                a == b
            }
        }
    }
}

impl fmt::Debug for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Constant(c) => write!(f, "Constant({c})"),
            Law::Affine { a, b } => write!(f, "Affine({a} + {b}·r)"),
            Law::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Law::Mollified(m) => write!(f, "Mollified(j = {})", m.index()),
        }
    }
}

fn poly_eval(c: &[f64], r: f64, order: u8) -> f64 {
    let mut acc = 0.0;
    for (i, &ci) in c.iter().enumerate().rev() {
        let factor = match order {
            0 => 1.0,
            1 if i >= 1 => i as f64,
            2 if i >= 2 => (i * (i - 1)) as f64,
            _ => 0.0,
        };
        let power = i.saturating_sub(order as usize);
        if factor != 0.0 {
            acc += factor * ci * r.powi(power as i32);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives_are_symbolic() {
        // (1 + r)^4 = 1 + 4r + 6r² + 4r³ + r⁴
        let law = Law::Polynomial(vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        let r: f64 = 0.3;
        assert!((law.eval(r, 0).unwrap() - (1.0 + r).powi(4)).abs() < 1e-14);
        assert!((law.eval(r, 1).unwrap() - 4.0 * (1.0 + r).powi(3)).abs() < 1e-14);
        assert!((law.eval(r, 2).unwrap() - 12.0 * (1.0 + r).powi(2)).abs() < 1e-13);
        assert!(matches!(law.eval(r, 3), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn affine_and_constant() {
        let law = Law::Affine { a: 2.0, b: 1.0 };
        assert_eq!(law.eval(0.5, 0).unwrap(), 2.5);
        assert_eq!(law.eval(0.5, 1).unwrap(), 1.0);
        assert_eq!(law.eval(0.5, 2).unwrap(), 0.0);
        assert_eq!(Law::Constant(4.0).eval(0.1, 1).unwrap(), 0.0);
        assert_eq!(Law::Polynomial(vec![3.0, 0.0]).constant_value(), Some(3.0));
        assert_eq!(Law::Polynomial(vec![3.0]), Law::Constant(3.0));
        assert_ne!(Law::Affine { a: 3.0, b: 1.0 }, Law::Constant(3.0));
    }
}
