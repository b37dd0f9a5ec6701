use serde::{Deserialize, Serialize};

/// Rational relation between two frequencies `b₂ = (q̂/p̂) b₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dependence {
    Independent,
    /// `0 < |q̂| < p̂`.
    Dependent { q_hat: i64, p_hat: i64 },
    /// Rationally related, but outside `0 < |q̂| < p̂`.
    OutOfRange { q_hat: i64, p_hat: i64 },
}

/// Continued-fraction test of whether `b2 / b1` is a fraction with denominator at most `max_denominator`.
pub fn rational_dependence(b1: f64, b2: f64, max_denominator: u64, tol: f64) -> Dependence {
    let x = b2 / b1;
    if !x.is_finite() {
        return Dependence::Independent;
    }
    let (mut h2, mut h1) = (0i128, 1i128);
    let (mut k2, mut k1) = (1i128, 0i128);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (h, k) = (a * h1 + h2, a * k1 + k2);
        if k > max_denominator as i128 {
            break;
        }
        if (x - h as f64 / k as f64).abs() < tol {
            let (q_hat, p_hat) = (h as i64, k as i64);
            return if q_hat != 0 && q_hat.abs() < p_hat {
                Dependence::Dependent { q_hat, p_hat }
            } else {
                Dependence::OutOfRange { q_hat, p_hat }
            };
        }
        (h2, h1, k2, k1) = (h1, h, k1, k);
        let frac = rest - a as f64;
        if frac <= 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    Dependence::Independent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_frequencies() {
        assert_eq!(
            rational_dependence(4.0, -2.0, 1000, 1e-12),
            Dependence::Dependent { q_hat: -1, p_hat: 2 }
        );
    }

    #[test]
    fn quadratic_irrational_ratio() {
        let r = 2f64.sqrt();
        assert_eq!(rational_dependence(1.0 + r, 1.0 - r, 1_000_000, 1e-12), Dependence::Independent);
    }

    #[test]
    fn equal_frequencies_are_out_of_range() {
        assert_eq!(
            rational_dependence(2.5, 2.5, 100, 1e-12),
            Dependence::OutOfRange { q_hat: 1, p_hat: 1 }
        );
        assert!(matches!(
            rational_dependence(2.5, 0.0, 100, 1e-12),
            Dependence::OutOfRange { q_hat: 0, .. }
        ));
    }
}
