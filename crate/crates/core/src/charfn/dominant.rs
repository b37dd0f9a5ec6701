use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{sinc, sinc_scaled, ScaledComplex, ZERO};
use crate::error::{Error, Result};
use crate::profiles::{Regularity, RefractiveProfile};

/// Beyond this many layers the `2^L` enumeration is refused.
const MAX_LAYERS: usize = 20;

/// Leading terms of `y(1)` and `y'(1)`:
/// `y ≈ Σ A_j sin(β_j k) / (m k)`, `y' ≈ m Σ A_j cos(β_j k)`, `m = n_L(1)^{1/4}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionModel {
    pub weights: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub outer: f64,
}

impl SolutionModel {
    pub fn eval_y(&self, k: Complex64) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.frequencies)
            .map(|(a, b)| sinc(k * b) * (a * b))
            .sum::<Complex64>()
            / self.outer
    }

    pub fn eval_yp(&self, k: Complex64) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.frequencies)
            .map(|(a, b)| (k * b).cos() * *a)
            .sum::<Complex64>()
            * self.outer
    }
}

/// `D(d)(k) = (1/(2^L k)) Σ_j weights_j · sin(frequencies_j · k)`.
///
/// Index `j − 1` is the binary number with bit `l − 1` equal to `i_l`, and
/// `frequencies_j = 1 + Σ (−1)^{i_l} δ̂_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominantTermModel {
    pub layers: usize,
    pub frequencies: Vec<f64>,
    pub weights: Vec<f64>,
    pub solution: SolutionModel,
}

impl DominantTermModel {
    pub fn leading_frequency(&self) -> f64 {
        self.frequencies[0]
    }

    pub fn leading_weight(&self) -> f64 {
        self.weights[0]
    }

    /// `β̃_{2^L} = 1 − δ_L`.
    pub fn trailing_frequency(&self) -> f64 {
        self.frequencies[self.frequencies.len() - 1]
    }

    /// `min_{j ≥ 2} (β̃₁ − |β̃_j|)`: how far the leading frequency dominates the others.
    pub fn frequency_gap(&self) -> f64 {
        let lead = self.leading_frequency();
        self.frequencies[1..]
            .iter()
            .map(|b| lead - b.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&self) -> f64 {
        (self.layers as f64).exp2()
    }
}

/// Structural inputs of the model: `n_1(0)`, interface ratios, layer thicknesses, `n_L(1)`.
struct ModelInputs {
    n_start: f64,
    ratios: Vec<f64>,
    thicknesses: Vec<f64>,
    n_end: f64,
}

fn inputs(profile: &RefractiveProfile) -> ModelInputs {
    if profile.regularity() == Regularity::C11 {
        // two-term model: interfaces are invisible to leading order
        return ModelInputs {
            n_start: profile.n_at_zero(),
            ratios: Vec::new(),
            thicknesses: vec![profile.delta_l()],
            n_end: profile.n_at_one(),
        };
    }
    let segs = profile.segments();
    let ratios = segs
        .windows(2)
        .map(|w| (w[0].law.value(w[0].end) / w[1].law.value(w[1].start)).powf(0.25))
        .collect();
    ModelInputs {
        n_start: profile.n_at_zero(),
        ratios,
        thicknesses: profile.delta_hats(),
        n_end: profile.n_at_one(),
    }
}

fn sign(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn bit(idx: usize, l: usize) -> usize {
    (idx >> l) & 1
}

/// Interface product `Π_{l=2..L} (a_l + (−1)^{i_l + i_{l−1}} / a_l)` for 0-based bits.
fn interface_product(ratios: &[f64], bits: impl Fn(usize) -> usize) -> f64 {
    ratios
        .iter()
        .enumerate()
        .map(|(l, a)| a + sign((bits(l + 1) + bits(l)) % 2) / a)
        .product()
}

pub fn dominant_coeffs(profile: &RefractiveProfile) -> Result<DominantTermModel> {
    let ModelInputs {
        n_start,
        ratios,
        thicknesses,
        n_end,
    } = inputs(profile);
    let layers = thicknesses.len();
    if layers > MAX_LAYERS {
        return Err(Error::Precondition(format!(
            "dominant model enumerates 2^L terms; L = {layers} exceeds {MAX_LAYERS}"
        )));
    }
    let inner = n_start.powf(-0.25);
    let m = n_end.powf(0.25);

    let count = 1usize << layers;
    let mut frequencies = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for idx in 0..count {
        let beta = 1.0
            + thicknesses
                .iter()
                .enumerate()
                .map(|(l, d)| sign(bit(idx, l)) * d)
                .sum::<f64>();
        let outer = m + sign(1 - bit(idx, layers - 1)) / m;
        frequencies.push(beta);
        weights.push(inner * outer * interface_product(&ratios, |l| bit(idx, l)));
    }

    let half = 1usize << (layers - 1);
    let mut y_freq = Vec::with_capacity(half);
    let mut y_weights = Vec::with_capacity(half);
    for idx in 0..half {
        // last bit pinned to 0
        let beta = thicknesses[layers - 1]
            + thicknesses[..layers - 1]
                .iter()
                .enumerate()
                .map(|(l, d)| sign(bit(idx, l)) * d)
                .sum::<f64>();
        y_freq.push(beta);
        y_weights.push(inner / half as f64 * interface_product(&ratios, |l| bit(idx, l)));
    }

    Ok(DominantTermModel {
        layers,
        frequencies,
        weights,
        solution: SolutionModel {
            weights: y_weights,
            frequencies: y_freq,
            outer: m,
        },
    })
}

/// `D(d)(k)`; the `k → 0` limit is finite.
pub fn dominant_eval(model: &DominantTermModel, k: Complex64) -> Complex64 {
    model
        .weights
        .iter()
        .zip(&model.frequencies)
        .map(|(a, b)| sinc(k * b) * (a * b))
        .sum::<Complex64>()
        / model.scale()
}

/// `D(d)(k)` as mantissa and log scale.
pub fn dominant_eval_scaled(model: &DominantTermModel, k: Complex64) -> ScaledComplex {
    let top = model
        .frequencies
        .iter()
        .map(|b| (b * k.im).abs())
        .fold(0.0, f64::max);
    let sum: Complex64 = model
        .weights
        .iter()
        .zip(&model.frequencies)
        .map(|(a, b)| {
            let x = k * b;
            if *a == 0.0 {
                ZERO
            } else {
                sinc_scaled(x) * (a * b) * (x.im.abs() - top).exp()
            }
        })
        .sum();
    ScaledComplex::new(sum / model.scale(), top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::d_of_k;
    use crate::profiles::{mollify, FnC11, Law, Segment};
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_index_has_zero_leading_weight() {
        let m = dominant_coeffs(&RefractiveProfile::constant(1.0).unwrap()).unwrap();
        assert_eq!(m.weights[0], 0.0);
        assert_eq!(m.frequencies[1], 0.0);
        assert_eq!(dominant_eval(&m, c(3.7, 0.4)), ZERO);
    }

    #[test]
    fn constant_four_expansion() {
        let m = dominant_coeffs(&RefractiveProfile::constant(4.0).unwrap()).unwrap();
        assert_eq!(m.frequencies, vec![3.0, -1.0]);
        assert!((m.weights[0] - 0.5).abs() < 1e-15 && (m.weights[1] - 1.5).abs() < 1e-15);
        for &kr in &[0.3_f64, 2.0, 11.0] {
            let expected = (0.5 * (3.0 * kr).sin() - 1.5 * kr.sin()) / (2.0 * kr);
            assert!((dominant_eval(&m, c(kr, 0.0)).re - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn jump_pair_frequencies_and_exactness() {
        let p = RefractiveProfile::piecewise_constant(&[0.5], &[4.0, 16.0]).unwrap();
        let m = dominant_coeffs(&p).unwrap();
        assert_eq!(m.frequencies, vec![4.0, 2.0, 0.0, -2.0]);
        for i in 1..=40 {
            let k = c(0.61 * i as f64, 0.0);
            assert!((dominant_eval(&m, k) - d_of_k(&p, k).unwrap().d).norm() < 1e-12);
        }
    }

    #[test]
    fn solution_model_is_exact_for_layers() {
        let p = RefractiveProfile::piecewise_constant(&[0.2, 0.55, 0.8], &[2.0, 0.7, 5.0, 1.3]).unwrap();
        let m = dominant_coeffs(&p).unwrap();
        for &k in &[c(1.1, 0.0), c(8.0, 0.3), c(23.0, -1.0)] {
            let v = d_of_k(&p, k).unwrap();
            assert!((m.solution.eval_y(k) - v.y1).norm() < 1e-12 * (1.0 + v.y1.norm()));
            assert!((m.solution.eval_yp(k) - v.yp1).norm() < 1e-12 * (1.0 + v.yp1.norm()));
            assert!((dominant_eval(&m, k) - v.d).norm() < 1e-12 * (1.0 + v.d.norm()));
        }
    }

    #[test]
    fn frequency_endpoints_match_delta() {
        let p = RefractiveProfile::new(
            vec![
                Segment::new(0.0, 0.3, Law::Affine { a: 2.0, b: 1.0 }),
                Segment::new(0.3, 1.0, Law::Constant(3.0)),
            ],
            Regularity::PiecewiseC2,
            crate::profiles::Bounds::new(2.0, 3.0),
        )
        .unwrap();
        let m = dominant_coeffs(&p).unwrap();
        let delta = p.delta_integral(0.0, 1.0).unwrap();
        assert!((m.leading_frequency() - (1.0 + delta)).abs() < 1e-12);
        assert!((m.trailing_frequency() - (1.0 - delta)).abs() < 1e-12);
    }

    #[test]
    fn c11_profiles_use_two_term_model() {
        let f = Arc::new(
            FnC11::new(|x| 2.0 + (x - 0.5) * (x - 0.5).abs(), |x| 2.0 * (x - 0.5).abs()).with_kinks(vec![0.5]),
        );
        let law = Law::Mollified(Arc::new(mollify(f, 8).unwrap()));
        let p = RefractiveProfile::smooth(law, Regularity::C11).unwrap();
        let m = dominant_coeffs(&p).unwrap();
        assert_eq!(m.layers, 1);
        let q = p.n_at_one().powf(0.25);
        let inner = p.n_at_zero().powf(-0.25);
        assert!((m.weights[0] - inner * (q - 1.0 / q)).abs() < 1e-14);
        assert!((m.weights[1] - inner * (q + 1.0 / q)).abs() < 1e-14);
        assert!((m.leading_frequency() - 1.0 - p.delta_l()).abs() < 1e-14);
    }

    #[test]
    fn zero_weights_give_zero() {
        let model = DominantTermModel {
            layers: 1,
            frequencies: vec![2.0, 0.0],
            weights: vec![0.0, 0.0],
            solution: SolutionModel {
                weights: vec![0.0],
                frequencies: vec![1.0],
                outer: 1.0,
            },
        };
        assert_eq!(dominant_eval(&model, c(3.0, 1.0)), ZERO);
    }

    #[test]
    fn scaled_eval_agrees() {
        let p = RefractiveProfile::piecewise_constant(&[0.4], &[3.0, 1.5]).unwrap();
        let m = dominant_coeffs(&p).unwrap();
        let k = c(4.0, 12.0);
        let s = dominant_eval_scaled(&m, k);
        assert!((s.value() - dominant_eval(&m, k)).norm() < 1e-12 * dominant_eval(&m, k).norm());
        assert!(dominant_eval_scaled(&m, c(1.0, 5000.0)).mantissa.is_finite());
    }
}
