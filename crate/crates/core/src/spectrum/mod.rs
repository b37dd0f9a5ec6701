//! Zeros of `d(k)`: real scan, argument-principle search in rectangles and the
//! counting-function density estimate.

mod complex;
mod density;
mod real;

pub use complex::{complex_eigs, complex_eigs_with, winding_number, ComplexSearch, Rect};
pub use density::{density_fit, density_fit_with, strip_height, CountingFit, DensityOptions, COUNTING_HEADER};
pub use real::{real_eigs, real_eigs_with, RealScan};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::ScaledComplex;
use crate::error::{Error, Result};
use crate::profiles::RefractiveProfile;

/// Zeros closer to the origin than this are not reported.
pub const K_FLOOR: f64 = 1e-3;

pub const EIGENVALUE_HEADER: &str = "index,k_re,k_im,multiplicity,residual";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub k: Complex64,
    pub multiplicity: u32,
    /// `|d(k)|` at the reported location.
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueSet {
    pub real_zeros: Vec<f64>,
    pub real_residuals: Vec<f64>,
    pub complex_zeros: Vec<Zero>,
    pub region: Option<Rect>,
    pub warnings: Vec<String>,
}

impl EigenvalueSet {
    /// Rows for the eigenvalue CSV: real zeros first (multiplicity 1), then complex zeros.
    pub fn rows(&self) -> Vec<(usize, Zero)> {
        let real = self.real_zeros.iter().zip(&self.real_residuals).map(|(&k, &r)| Zero {
            k: Complex64::new(k, 0.0),
            multiplicity: 1,
            residual: r,
        });
        real.chain(self.complex_zeros.iter().copied()).enumerate().collect()
    }

    pub fn zero_count(&self) -> u32 {
        self.real_zeros.len() as u32 + self.complex_zeros.iter().map(|z| z.multiplicity).sum::<u32>()
    }
}

pub(crate) fn refuse_degenerate(profile: &RefractiveProfile) -> Result<()> {
    if profile.is_unit() {
        Err(Error::Degenerate)
    } else {
        Ok(())
    }
}

/// `a / b` for two scaled values, finite even when both overflow `f64`.
pub(crate) fn scaled_ratio(a: ScaledComplex, b: ScaledComplex) -> Complex64 {
    a.mantissa / b.mantissa * (a.log_scale - b.log_scale).exp()
}

/// Brings scaled values to a common scale.
pub(crate) fn common_scale(values: &[ScaledComplex]) -> (Vec<Complex64>, f64) {
    let top = values.iter().map(|v| v.log_scale).fold(f64::NEG_INFINITY, f64::max);
    (
        values.iter().map(|v| v.mantissa * (v.log_scale - top).exp()).collect(),
        top,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_put_real_zeros_first() {
        let set = EigenvalueSet {
            real_zeros: vec![1.0, 2.0],
            real_residuals: vec![0.0, 1e-12],
            complex_zeros: vec![Zero {
                k: Complex64::new(3.0, 1.0),
                multiplicity: 2,
                residual: 0.0,
            }],
            ..Default::default()
        };
        let rows = set.rows();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].1.multiplicity, 2);
        assert_eq!(set.zero_count(), 4);
    }

    #[test]
    fn ratio_of_huge_values() {
        let a = ScaledComplex::new(Complex64::new(2.0, 0.0), 5000.0);
        let b = ScaledComplex::new(Complex64::new(1.0, 0.0), 4999.0);
        assert!((scaled_ratio(a, b).re - 2.0 * 1f64.exp()).abs() < 1e-12);
    }
}
