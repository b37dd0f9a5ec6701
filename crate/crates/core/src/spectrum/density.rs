use serde::{Deserialize, Serialize};

use super::complex::{complex_eigs_with, ComplexSearch, Rect};
use super::{refuse_degenerate, Zero, K_FLOOR};
use crate::charfn::{dominant_coeffs, DominantTermModel};
use crate::error::{Error, Result};
use crate::profiles::RefractiveProfile;

pub const COUNTING_HEADER: &str = "T,count";

/// Strip height used when the dominant model gives no usable bound.
const FALLBACK_HEIGHT: f64 = 10.0;

/// Least-squares fit of the zero-counting function `N(T) = #{z : |z| ≤ T}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingFit {
    pub thresholds: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    /// `slope · π/2 − 1`.
    pub delta_estimate: f64,
    /// Imaginary extent of the searched strip.
    pub strip_height: f64,
    pub caveat: Option<String>,
}

impl CountingFit {
    pub fn rows(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.thresholds.iter().copied().zip(self.counts.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    pub thresholds: usize,
    pub min_zeros: usize,
    /// Depth below the real axis included so axis zeros sit strictly inside.
    pub below_axis: f64,
    pub search: ComplexSearch,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            thresholds: 10,
            min_zeros: 50,
            below_axis: 1e-3,
            search: ComplexSearch::default(),
        }
    }
}

/// Height above which the leading exponential dominates the rest of the model by a factor of four.
///
/// Returns the height and a caveat when the model gives no separation.
pub fn strip_height(model: &DominantTermModel) -> (f64, Option<String>) {
    let gap = model.frequency_gap();
    let lead = model.leading_weight().abs();
    let rest: f64 = model.weights[1..].iter().map(|w| w.abs()).sum();
    if !(gap > 0.0) || !(lead > 0.0) || !gap.is_finite() {
        return (
            FALLBACK_HEIGHT,
            Some(format!(
                "leading term does not separate (gap {gap}, weight {lead}); strip height fixed at {FALLBACK_HEIGHT}"
            )),
        );
    }
    ((4.0 * rest / lead + 1.0).ln() / gap + 1.0, None)
}

pub fn density_fit(profile: &RefractiveProfile, t_max: f64) -> Result<CountingFit> {
    density_fit_with(profile, t_max, DensityOptions::default())
}

pub fn density_fit_with(profile: &RefractiveProfile, t_max: f64, opts: DensityOptions) -> Result<CountingFit> {
    refuse_degenerate(profile)?;
    if !(t_max > K_FLOOR) || opts.thresholds < 2 {
        return Err(Error::Precondition(format!(
            "need T_max > {K_FLOOR} and at least two thresholds, got {t_max} and {}",
            opts.thresholds
        )));
    }
    let model = dominant_coeffs(profile)?;
    let (height, mut caveat) = strip_height(&model);
    let rect = Rect::new(opts.search.k_floor, t_max, -opts.below_axis, height)?;
    let set = complex_eigs_with(profile, &rect, opts.search)?;

    let weighted: Vec<(f64, u64)> = set
        .complex_zeros
        .iter()
        .filter_map(|z| symmetry_weight(z, opts.search.min_cell).map(|w| (z.k.norm(), w)))
        .collect();
    if set.complex_zeros.iter().any(|z| z.k.im > 0.5 * height) {
        caveat.get_or_insert_with(|| {
            format!("zeros found in the upper half of the strip of height {height}; zeros above it are not counted")
        });
    }
    let thresholds: Vec<f64> = (1..=opts.thresholds)
        .map(|m| t_max * m as f64 / opts.thresholds as f64)
        .collect();
    let counts: Vec<u64> = thresholds
        .iter()
        .map(|&t| weighted.iter().filter(|&&(r, _)| r <= t).map(|&(_, w)| w).sum())
        .collect();
    let total = *counts.last().unwrap_or(&0) as usize;
    if total < opts.min_zeros {
        return Err(Error::InsufficientZeros {
            found: total,
            needed: opts.min_zeros,
        });
    }
    let (slope, intercept) = least_squares(&thresholds, &counts);
    Ok(CountingFit {
        thresholds,
        counts,
        slope,
        intercept,
        delta_estimate: slope * std::f64::consts::FRAC_PI_2 - 1.0,
        strip_height: height,
        caveat,
    })
}

/// Number of symmetry images (`±z`, `±z̄`) a zero found in the right half-plane stands for,
/// times its multiplicity. Zeros just below the axis are mirror images and are skipped.
fn symmetry_weight(z: &Zero, min_cell: f64) -> Option<u64> {
    let axis_tol = min_cell * z.k.norm().max(1.0);
    let images = if z.k.im.abs() <= axis_tol {
        2
    } else if z.k.im > 0.0 {
        4
    } else {
        return None;
    };
    Some(images * z.multiplicity as u64)
}

fn least_squares(xs: &[f64], ys: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().map(|&y| y as f64).sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, &y)| (x - mx) * (y as f64 - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
