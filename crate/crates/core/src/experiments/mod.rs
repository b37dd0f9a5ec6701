//! The two-layer non-uniqueness pair and inverse fits from eigenvalue data.

mod fit;
mod simplex;

pub use fit::{fit_profile, FitModel, FitProblem, FitResult, LocalMinimum, StartReport, Tail};
pub use simplex::{nelder_mead, SimplexOptions, SimplexOutcome};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::{d_of_k, d_two_layer_closed};
use crate::error::{Error, Result};
use crate::profiles::RefractiveProfile;
use crate::spectrum::{real_eigs, K_FLOOR};

/// `n = 4` then `16`, and `16` then `4`, switching at `r = ½`.
pub fn build_counterexample_pair() -> (RefractiveProfile, RefractiveProfile) {
    let make = |a, b| RefractiveProfile::piecewise_constant(&[0.5], &[a, b]).expect("valid fixture");
    (make(4.0, 16.0), make(16.0, 4.0))
}

/// The product form often quoted for the first profile of the pair; it does not match `d`.
pub fn quoted_closed_form(k: f64) -> f64 {
    9.0 / (16.0 * k) * ((2.0 * k).sin() + (4.0 * k).sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub grid_points: usize,
    /// `max |d₁ − 3 d₂|`.
    pub ratio_deviation: f64,
    /// `max |d₁ − (9/(16k))(sin 2k + sin 4k)|`.
    pub quoted_form_deviation: f64,
    /// `max |d₁ − d_two_layer_closed(4, 16, ½, k)|`.
    pub closed_form_deviation: f64,
    pub k_max: f64,
    pub zeros_first: usize,
    pub zeros_second: usize,
    /// Hausdorff distance between the real zero sets on `(0, k_max]`.
    pub zero_set_distance: f64,
    /// The same distance restricted to zeros where `d'` does not vanish.
    pub simple_zero_distance: f64,
}

pub fn verify_counterexample(k_grid: &[f64]) -> Result<CounterexampleReport> {
    if k_grid.is_empty() || k_grid.iter().any(|&k| !(k >= K_FLOOR)) {
        return Err(Error::Precondition(format!("grid must be non-empty with every k ≥ {K_FLOOR}")));
    }
    let (p1, p2) = build_counterexample_pair();
    let devs: Vec<[f64; 3]> = k_grid
        .par_iter()
        .map(|&k| {
            let kc = Complex64::new(k, 0.0);
            let d1 = d_of_k(&p1, kc)?.d;
            let d2 = d_of_k(&p2, kc)?.d;
            Ok([
                (d1 - 3.0 * d2).norm(),
                (d1.re - quoted_closed_form(k)).abs().max(d1.im.abs()),
                (d1 - d_two_layer_closed(4.0, 16.0, 0.5, kc)).norm(),
            ])
        })
        .collect::<Result<_>>()?;
    let max_of = |i: usize| devs.iter().map(|d| d[i]).fold(0.0, f64::max);
    let k_max = k_grid.iter().copied().fold(0.0, f64::max);
    let (z1, z2) = if k_max > K_FLOOR {
        (real_eigs(&p1, k_max)?.real_zeros, real_eigs(&p2, k_max)?.real_zeros)
    } else {
        (Vec::new(), Vec::new())
    };
    let simple = |p: &RefractiveProfile, zs: &[f64]| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for &z in zs {
            let h = 1e-4;
            let slope = (d_of_k(p, Complex64::new(z + h, 0.0))?.d - d_of_k(p, Complex64::new(z - h, 0.0))?.d).norm()
                / (2.0 * h);
            if slope > 1e-6 {
                out.push(z);
            }
        }
        Ok(out)
    };
    let (s1, s2) = (simple(&p1, &z1)?, simple(&p2, &z2)?);
    Ok(CounterexampleReport {
        grid_points: k_grid.len(),
        ratio_deviation: max_of(0),
        quoted_form_deviation: max_of(1),
        closed_form_deviation: max_of(2),
        k_max,
        zeros_first: z1.len(),
        zeros_second: z2.len(),
        zero_set_distance: hausdorff(&z1, &z2),
        simple_zero_distance: hausdorff(&s1, &s2),
    })
}

fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_way = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pair_values() {
        let (a, b) = build_counterexample_pair();
        assert_eq!(a.value(0.75), 16.0);
        assert_eq!(b.value(0.25), 16.0);
        assert!((a.delta_l() - 3.0).abs() < 1e-15 && (b.delta_l() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_identity_and_zero_sets() {
        let grid: Vec<f64> = (1..=500).map(|i| 0.1 + 49.9 * i as f64 / 500.0).collect();
        let r = verify_counterexample(&grid).unwrap();
        assert!(r.ratio_deviation <= 1e-10, "{r:?}");
        assert!(r.closed_form_deviation <= 1e-10, "{r:?}");
        assert_eq!(r.zeros_first, r.zeros_second);
        assert!(r.simple_zero_distance <= 1e-9, "{r:?}");
        // triple zeros at mπ are resolved only to the cube root of rounding
        assert!(r.zero_set_distance <= 1e-4, "{r:?}");
    }

    #[test]
    fn quoted_form_is_off() {
        let r = verify_counterexample(&[0.7, 1.3, 2.9]).unwrap();
        assert!(r.quoted_form_deviation > 0.1);
    }

    #[test]
    fn quarter_wave_is_a_shared_zero() {
        let (a, b) = build_counterexample_pair();
        let k = Complex64::new(PI / 2.0, 0.0);
        assert!(d_of_k(&a, k).unwrap().d.norm() < 1e-15);
        assert!(d_of_k(&b, k).unwrap().d.norm() < 1e-15);
    }

    #[test]
    fn constant_nine_is_isospectral() {
        let (a, _) = build_counterexample_pair();
        let nine = RefractiveProfile::constant(9.0).unwrap();
        for i in 1..=50 {
            let k = Complex64::new(0.37 * i as f64, 0.0);
            let lhs = d_of_k(&a, k).unwrap().d;
            let rhs = d_of_k(&nine, k).unwrap().d * (27.0 / 16.0);
            assert!((lhs - rhs).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn rejects_tiny_k() {
        assert!(verify_counterexample(&[1e-6]).is_err());
        assert!(verify_counterexample(&[]).is_err());
    }
}
