use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{d_of_k, dominant_coeffs, dominant_eval};
use crate::error::{Error, Result};
use crate::profiles::RefractiveProfile;

/// Largest `k² |d(k) − D(d)(k)|` over a window of real `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderFit {
    pub k_lo: f64,
    pub k_hi: f64,
    pub constant: f64,
    /// Where the maximum is attained.
    pub k_at_max: f64,
}

pub fn remainder_constant(profile: &RefractiveProfile, k_lo: f64, k_hi: f64, samples: usize) -> Result<RemainderFit> {
    if !(k_lo > 0.0 && k_hi > k_lo) || samples < 2 {
        return Err(Error::Precondition(format!(
            "need 0 < k_lo < k_hi and at least two samples, got [{k_lo}, {k_hi}] with {samples}"
        )));
    }
    let model = dominant_coeffs(profile)?;
    let scaled: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let k = k_lo + (k_hi - k_lo) * i as f64 / (samples - 1) as f64;
            let kc = Complex64::new(k, 0.0);
            let gap = (d_of_k(profile, kc)?.d - dominant_eval(&model, kc)).norm();
            Ok((k, k * k * gap))
        })
        .collect::<Result<_>>()?;
    let (k_at_max, constant) = scaled
        .into_iter()
        .fold((k_lo, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(RemainderFit {
        k_lo,
        k_hi,
        constant,
        k_at_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{Law, Regularity};

    #[test]
    fn vanishes_for_layered_constants() {
        let p = RefractiveProfile::piecewise_constant(&[0.5], &[4.0, 16.0]).unwrap();
        let fit = remainder_constant(&p, 10.0, 40.0, 50).unwrap();
        assert!(fit.constant < 1e-9, "{fit:?}");
    }

    #[test]
    fn affine_profile_decays_like_inverse_square() {
        let p = RefractiveProfile::smooth(Law::Affine { a: 2.0, b: 1.0 }, Regularity::C2).unwrap();
        let lo = remainder_constant(&p, 20.0, 40.0, 60).unwrap();
        let hi = remainder_constant(&p, 40.0, 80.0, 60).unwrap();
        let ratio = lo.constant / hi.constant;
        assert!(lo.constant > 0.0 && (0.25..=4.0).contains(&ratio), "{lo:?} {hi:?}");
    }
}
