use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kronecker::{kronecker_search, KroneckerHit, KroneckerStrategy};
use super::rational::{rational_dependence, Dependence};
use super::{dependent_epsilon1, m_tilde_1, theorem_constants, DEFAULT_MAX_DENOMINATOR, DEFAULT_RATIO_TOL};
use crate::charfn::{d_scaled, dominant_coeffs, remainder_constant};
use crate::cmath::sin_scaled;
use crate::error::{Error, Result};
use crate::profiles::RefractiveProfile;

pub const CONTOUR_HEADER: &str = "k_re,k_im,abs_d,normalized";

/// Normalised `|d|` below this on a boundary sample means the contour runs through a zero.
const ZERO_LEVEL: f64 = 1e-13;

/// Window and safety factor of the fitted remainder constant standing in for `C₁`.
const REMAINDER_WINDOW: (f64, f64) = (50.0, 100.0);
const REMAINDER_SAMPLES: usize = 101;
const REMAINDER_SAFETY: f64 = 4.0;

/// Which parameter table fixes the Kronecker targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourCase {
    #[default]
    Case1,
    Case2a,
    Case2b,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourParams {
    pub case: ContourCase,
    /// Remainder constant; fitted on real `k ∈ [50, 100]` and scaled by 4 when absent.
    pub c1: Option<f64>,
    /// Extra lower bound on `t₁`, on top of the one the case prescribes.
    pub t_floor: f64,
    pub t_cap: f64,
    pub strategy: KroneckerStrategy,
    pub samples: usize,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self {
            case: ContourCase::Case1,
            c1: None,
            t_floor: 0.0,
            t_cap: 1e7,
            strategy: KroneckerStrategy::Windows,
            samples: 1000,
        }
    }
}

/// Closed curve made of two arcs of `|k| = (N₁ + ½)π/β̃₁` and the segments `Re k = ±t₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub case: ContourCase,
    pub t1: f64,
    pub n1: u64,
    pub c1: f64,
    pub c2: f64,
    /// Lower bound `T₁` imposed on `t₁`.
    pub t_lower: f64,
    pub eps1: f64,
    /// `min_{j ≥ 2} (β̃₁ − |β̃_j|)`.
    pub gap: f64,
    pub leading_frequency: f64,
    pub radius: f64,
    pub e1: Complex64,
    pub f1: Complex64,
    pub e2: Complex64,
    pub f2: Complex64,
    pub kronecker: KroneckerHit,
    pub samples: Vec<Complex64>,
}

pub fn build_contour(profile: &RefractiveProfile, params: &ContourParams) -> Result<ContourSpec> {
    let consts = theorem_constants(profile);
    if consts.m1 == 0.0 {
        return Err(Error::Precondition("n(1) = 1: the contour bounds are void".into()));
    }
    let model = dominant_coeffs(profile)?;
    let (b1, b_last) = (model.leading_frequency(), model.trailing_frequency());
    let gap = model.frequency_gap();
    if !(gap > 0.0) {
        return Err(Error::Precondition(format!("leading frequency does not dominate (gap {gap})")));
    }
    let c1 = match params.c1 {
        Some(c) => c,
        None => {
            let (lo, hi) = REMAINDER_WINDOW;
            REMAINDER_SAFETY * remainder_constant(profile, lo, hi, REMAINDER_SAMPLES)?.constant
        }
    };
    let m2_l = consts.m2.powi(model.layers as i32);
    let log_term = (24.0 * m2_l / consts.m1).ln() / gap;

    let dependent = || match rational_dependence(b1, b_last, DEFAULT_MAX_DENOMINATOR, DEFAULT_RATIO_TOL) {
        Dependence::Dependent { q_hat, p_hat } => Ok((q_hat, p_hat)),
        other => Err(Error::Precondition(format!(
            "dependent-case contour needs 0 < |q| < p, found {other:?}"
        ))),
    };
    // (v, a, eps1, T₁, C₂)
    let (v, a, eps1, t_lower, c2) = match params.case {
        ContourCase::Case1 => {
            let eps1 = (1.0 / 12.0f64).min(consts.m1 / (96.0 * PI * m2_l));
            let t_lower = 24.0 * c1 / consts.m1 + 1.0;
            (
                vec![b1 / (2.0 * PI), b_last / (2.0 * PI)],
                vec![0.25, 0.0],
                eps1,
                t_lower,
                log_term.max(t_lower),
            )
        }
        ContourCase::Case2a => {
            let (q, p) = dependent()?;
            let s = (p + q.abs()) as f64;
            let mt1 = m_tilde_1(q, p);
            let t_lower = (24.0 * c1 / consts.m1 + 1.0).max(4.0 * c1 / (consts.m1 * mt1) + 1.0);
            (
                vec![b1 / (2.0 * PI * p as f64)],
                vec![1.0 + 1.0 / s],
                dependent_epsilon1(q, p),
                t_lower,
                (log_term + 1.0).max(t_lower),
            )
        }
        ContourCase::Case2b => {
            let (q, p) = dependent()?;
            let (qf, pf) = (q.abs() as f64, p as f64);
            let t_lower = 24.0 * c1 / consts.m1 + 1.0;
            (
                vec![b1 / (2.0 * PI * pf)],
                vec![1.0 / (4.0 * pf)],
                (1.0 / (6.0 * pf)).min(0.25 * (1.0 / qf - 1.0 / pf)),
                t_lower,
                log_term.max(t_lower),
            )
        }
    };
    let kronecker = kronecker_search(&v, &a, eps1, t_lower.max(params.t_floor), params.t_cap, params.strategy)?.hit()?;
    let t1 = kronecker.t;
    let n1 = ((b1 / PI) * t1.hypot(c2) - 0.5).floor() as u64 + 1;
    let radius = (n1 as f64 + 0.5) * PI / b1;
    let h = (radius * radius - t1 * t1).sqrt();
    let (e1, f1) = (Complex64::new(-t1, -h), Complex64::new(-t1, h));
    let (e2, f2) = (Complex64::new(t1, -h), Complex64::new(t1, h));
    let samples = boundary_samples(t1, radius, params.samples.max(8));
    Ok(ContourSpec {
        case: params.case,
        t1,
        n1,
        c1,
        c2,
        t_lower,
        eps1,
        gap,
        leading_frequency: b1,
        radius,
        e1,
        f1,
        e2,
        f2,
        kronecker,
        samples,
    })
}

/// Counter-clockwise samples: right segment, upper arc, left segment, lower arc.
fn boundary_samples(t1: f64, radius: f64, count: usize) -> Vec<Complex64> {
    let h = (radius * radius - t1 * t1).sqrt();
    let phi = h.atan2(t1);
    let seg = 2.0 * h;
    let arc = radius * (PI - 2.0 * phi);
    let total = 2.0 * (seg + arc);
    let share = |len: f64| ((count as f64 * len / total).round() as usize).max(2);
    let mut out = Vec::with_capacity(count + 8);
    let ns = share(seg);
    let na = share(arc);
    for i in 0..ns {
        out.push(Complex64::new(t1, -h + seg * i as f64 / ns as f64));
    }
    for i in 0..na {
        out.push(Complex64::from_polar(radius, phi + (PI - 2.0 * phi) * i as f64 / na as f64));
    }
    for i in 0..ns {
        out.push(Complex64::new(-t1, h - seg * i as f64 / ns as f64));
    }
    for i in 0..na {
        out.push(Complex64::from_polar(radius, PI + phi + (PI - 2.0 * phi) * i as f64 / na as f64));
    }
    out
}

/// Smallest `|sin(β̃₁k)| / (¼ e^{β̃₁|Im k|})` over `samples` points of `|k| = (N + ½)π/β̃₁`.
pub fn verify_arc_bound(beta1: f64, n: u64, samples: usize) -> Result<f64> {
    if n < 1 || !(beta1 > 0.0) || samples == 0 {
        return Err(Error::Precondition(format!("need N ≥ 1, β̃₁ > 0, samples > 0; got {n}, {beta1}, {samples}")));
    }
    let radius = (n as f64 + 0.5) * PI / beta1;
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let k = Complex64::from_polar(radius, 2.0 * PI * i as f64 / samples as f64);
            4.0 * sin_scaled(beta1 * k).norm()
        })
        .reduce(|| f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSample {
    pub k: Complex64,
    /// `|d(k)|`; infinite once it leaves the `f64` range.
    pub abs_d: f64,
    /// `|d(k)| |k| e^{−β̃₁|Im k|}`.
    pub normalized: f64,
}

impl ContourSample {
    pub fn fields(&self) -> [f64; 4] {
        [self.k.re, self.k.im, self.abs_d, self.normalized]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourCheck {
    pub min_normalized: f64,
    pub at: Complex64,
    /// `min_normalized / (M₁/24)`.
    pub fraction_of_bound: f64,
    pub samples: Vec<ContourSample>,
}

pub fn verify_contour_lower_bound(profile: &RefractiveProfile, spec: &ContourSpec) -> Result<ContourCheck> {
    let m1 = theorem_constants(profile).m1;
    let b1 = spec.leading_frequency;
    let samples: Vec<ContourSample> = spec
        .samples
        .par_iter()
        .map(|&k| {
            let d = d_scaled(profile, k)?;
            let ln_norm = d.ln_abs() + k.norm().ln() - b1 * k.im.abs();
            Ok(ContourSample {
                k,
                abs_d: d.ln_abs().exp(),
                normalized: ln_norm.exp(),
            })
        })
        .collect::<Result<_>>()?;
    let worst = samples
        .iter()
        .min_by(|a, b| a.normalized.total_cmp(&b.normalized))
        .ok_or_else(|| Error::Precondition("contour has no samples".into()))?;
    if !(worst.normalized > ZERO_LEVEL) {
        return Err(Error::ContourThroughZero(format!(
            "|d| vanishes near {} on the contour; rebuild with a different t",
            worst.k
        )));
    }
    Ok(ContourCheck {
        min_normalized: worst.normalized,
        at: worst.k,
        fraction_of_bound: worst.normalized / (m1 / 24.0),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn irrational_pair() -> RefractiveProfile {
        RefractiveProfile::piecewise_constant(&[0.5], &[2.0, 2.01]).unwrap()
    }

    #[test]
    fn arc_bound_on_the_real_axis_point() {
        // one sample sits at angle 0: |sin((N + ½)π)| = 1
        let r = verify_arc_bound(4.0, 10, 1).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn arc_bound_holds_uniformly() {
        for beta in [1.5, 4.0, 7.3] {
            for n in [5, 10, 20, 100] {
                assert!(verify_arc_bound(beta, n, 1000).unwrap() >= 1.0, "β = {beta}, N = {n}");
            }
        }
    }

    #[test]
    fn contour_geometry() {
        let p = irrational_pair();
        let spec = build_contour(&p, &ContourParams::default()).unwrap();
        assert!(spec.radius > spec.t1.hypot(spec.c2));
        for c in [spec.e1, spec.f1, spec.e2, spec.f2] {
            assert!((c.norm() - spec.radius).abs() < 1e-10 * spec.radius);
            assert!((c.re.abs() - spec.t1).abs() < 1e-10);
        }
        assert!(spec.t1 > spec.t_lower);
        let h = &spec.kronecker;
        assert!((spec.t1 * spec.leading_frequency / (2.0 * PI) - h.p[0] as f64 - 0.25).abs() < spec.eps1);
        assert!(spec.samples.len() >= 990 && spec.samples.len() <= 1010);
    }

    #[test]
    fn lower_bound_is_positive_and_stable() {
        let p = irrational_pair();
        let spec = build_contour(&p, &ContourParams::default()).unwrap();
        let check = verify_contour_lower_bound(&p, &spec).unwrap();
        assert!(check.min_normalized > 0.0);
        let later = build_contour(
            &p,
            &ContourParams {
                t_floor: 2.0 * spec.t1,
                ..Default::default()
            },
        )
        .unwrap();
        let check2 = verify_contour_lower_bound(&p, &later).unwrap();
        assert!(later.t1 > spec.t1);
        assert!(check2.min_normalized >= 0.5 * check.min_normalized, "{check2:?} vs {check:?}");
    }

    #[test]
    fn dependent_case_contour() {
        let p = RefractiveProfile::constant(4.0).unwrap();
        let spec = build_contour(
            &p,
            &ContourParams {
                case: ContourCase::Case2a,
                ..Default::default()
            },
        )
        .unwrap();
        let check = verify_contour_lower_bound(&p, &spec).unwrap();
        assert!(check.min_normalized > 0.0);
        assert!(build_contour(&RefractiveProfile::constant(1.0).unwrap(), &ContourParams::default()).is_err());
    }
}
