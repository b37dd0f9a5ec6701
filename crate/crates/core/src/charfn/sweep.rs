use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{d_of_k, dominant_coeffs, dominant_eval};
use crate::error::Result;
use crate::profiles::RefractiveProfile;

pub const SWEEP_HEADER: &str = "k_re,k_im,d_re,d_im,Dd_re,Dd_im";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: Complex64,
    pub d: Complex64,
    pub dominant: Complex64,
}

impl SweepRow {
    pub fn fields(&self) -> [f64; 6] {
        [self.k.re, self.k.im, self.d.re, self.d.im, self.dominant.re, self.dominant.im]
    }
}

/// `d` and its dominant term at every `k`, evaluated in parallel, input order kept.
pub fn sweep(profile: &RefractiveProfile, ks: &[Complex64]) -> Result<Vec<SweepRow>> {
    let model = dominant_coeffs(profile)?;
    ks.par_iter()
        .map(|&k| {
            Ok(SweepRow {
                k,
                d: d_of_k(profile, k)?.d,
                dominant: dominant_eval(&model, k),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order_and_matches_direct_calls() {
        let p = RefractiveProfile::piecewise_constant(&[0.5], &[4.0, 16.0]).unwrap();
        let ks: Vec<Complex64> = (1..=32).map(|i| Complex64::new(i as f64 * 0.5, 0.0)).collect();
        let rows = sweep(&p, &ks).unwrap();
        for (row, k) in rows.iter().zip(&ks) {
            assert_eq!(row.k, *k);
            assert_eq!(row.d, d_of_k(&p, *k).unwrap().d);
            assert!((row.d - row.dominant).norm() < 1e-12);
        }
        assert_eq!(rows[0].fields()[0], 0.5);
    }
}
