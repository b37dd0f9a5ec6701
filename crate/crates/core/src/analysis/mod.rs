//! Audits of the uniqueness hypotheses: theorem constants, rational dependence of
//! the extreme frequencies, case classification, Kronecker search and the
//! contour lower bounds.

mod contour;
mod kronecker;
mod rational;

pub use contour::{
    build_contour, verify_arc_bound, verify_contour_lower_bound, ContourCase, ContourCheck, ContourParams, ContourSample,
    ContourSpec, CONTOUR_HEADER,
};
pub use kronecker::{kronecker_search, KroneckerHit, KroneckerOutcome, KroneckerStrategy};
pub use rational::{rational_dependence, Dependence};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::charfn::dominant_coeffs;
use crate::error::Result;
use crate::profiles::{Regularity, RefractiveProfile};

/// Largest denominator tried when testing the extreme frequencies for a rational ratio.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1000;
pub const DEFAULT_RATIO_TOL: f64 = 1e-9;

/// `n(1)` closer to 1 than this counts as `n(1) = 1`.
const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "Mt2")]
    pub mt2: f64,
}

/// `M₁ = |n(1)^{1/4} − n(1)^{−1/4}|`, `M̃₂ = n(1)^{1/4} + n(1)^{−1/4}` and
/// `M₂ = max{(n_*/n^*)^{1/4} + (n^*/n_*)^{1/4}, M̃₂}`.
pub fn theorem_constants(profile: &RefractiveProfile) -> TheoremConstants {
    let q = profile.n_at_one().powf(0.25);
    let b = profile.bounds();
    let spread = (b.n_star / b.n_star_upper).powf(0.25) + (b.n_star_upper / b.n_star).powf(0.25);
    let mt2 = q + 1.0 / q;
    TheoremConstants {
        m1: (q - 1.0 / q).abs(),
        m2: spread.max(mt2),
        mt2,
    }
}

/// `ε₁` of the dependent case with matching signs, from `q̂` and `p̂`.
pub fn dependent_epsilon1(q_hat: i64, p_hat: i64) -> f64 {
    let (q, p) = (q_hat.unsigned_abs() as f64, p_hat as f64);
    let s = p + q;
    [
        1.0 / (2.0 * s),
        4.0 * q * (p - q) / s,
        4.0 * p * (p - q) / s,
        q / (2.0 * p * s),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// `M̃₁ = min |sin((p̂ − |q̂|)π/(p̂ + |q̂|) ± 2p̂ε₁)|`.
pub fn m_tilde_1(q_hat: i64, p_hat: i64) -> f64 {
    let (q, p) = (q_hat.unsigned_abs() as f64, p_hat as f64);
    let eps1 = dependent_epsilon1(q_hat, p_hat);
    let base = (p - q) / (p + q) * PI;
    (base + 2.0 * p * eps1).sin().abs().min((base - 2.0 * p * eps1).sin().abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", content = "reason", rename_all = "snake_case")]
pub enum CaseVerdict {
    Case1,
    Case2a,
    Case2b,
    Inapplicable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    /// Defined only when the extreme frequencies are rationally dependent.
    #[serde(rename = "Mt1")]
    pub mt1: Option<f64>,
    #[serde(rename = "Mt2")]
    pub mt2: f64,
    pub epsilon0: f64,
    pub delta_l: f64,
    pub alpha: f64,
    /// Layer count entering `M₂^{L−1}`.
    pub layers: usize,
    pub leading_frequency: f64,
    pub trailing_frequency: f64,
    pub dependence: Dependence,
    /// Right-hand side of the `ε₀` condition for the applicable case.
    pub epsilon0_bound: Option<f64>,
    pub case_verdict: CaseVerdict,
}

pub fn classify_case(profile: &RefractiveProfile, eps: f64) -> Result<HypothesisReport> {
    classify_case_with(profile, eps, DEFAULT_MAX_DENOMINATOR, DEFAULT_RATIO_TOL)
}

pub fn classify_case_with(
    profile: &RefractiveProfile,
    eps: f64,
    max_denominator: u64,
    tol: f64,
) -> Result<HypothesisReport> {
    // splitting a layer into identical halves must not change the verdict
    let profile = profile.canonical();
    let TheoremConstants { m1, m2, mt2 } = theorem_constants(&profile);
    let delta_l = profile.delta_l();
    let epsilon0 = profile.epsilon0();
    let alpha = profile.alpha_point(eps)?;
    let layers = if profile.regularity() == Regularity::C11 {
        1
    } else {
        profile.layer_count()
    };
    let (b1, b_last) = (1.0 + delta_l, 1.0 - delta_l);
    let dependence = rational_dependence(b1, b_last, max_denominator, tol);
    let n_one = profile.n_at_one();
    let n_lower = profile.bounds().n_star;
    let m2_pow = m2.powi(layers as i32 - 1);
    let mt1 = match dependence {
        Dependence::Dependent { q_hat, p_hat } => Some(m_tilde_1(q_hat, p_hat)),
        _ => None,
    };
    let bound_24 = n_lower * m1 / (24.0 * m2_pow);

    let (epsilon0_bound, case_verdict) = if (n_one - 1.0).abs() < UNIT_TOL {
        (None, CaseVerdict::Inapplicable("n(1) = 1".into()))
    } else {
        match dependence {
            Dependence::Independent => (Some(bound_24), gate(epsilon0, bound_24, CaseVerdict::Case1)),
            Dependence::OutOfRange { q_hat, p_hat } => (
                None,
                CaseVerdict::Inapplicable(format!("frequency ratio {q_hat}/{p_hat} outside 0 < |q| < p")),
            ),
            Dependence::Dependent { .. } => {
                let same_side = (delta_l > 1.0 && n_one > 1.0) || (delta_l < 1.0 && n_one < 1.0);
                let mixed = (delta_l < 1.0 && n_one > 1.0) || (delta_l > 1.0 && n_one < 1.0);
                if same_side {
                    let bound = m1 * mt1.unwrap_or(0.0) * n_lower / (12.0 * m2_pow);
                    (Some(bound), gate(epsilon0, bound, CaseVerdict::Case2a))
                } else if mixed {
                    (Some(bound_24), gate(epsilon0, bound_24, CaseVerdict::Case2b))
                } else {
                    (None, CaseVerdict::Inapplicable("δ_L = 1".into()))
                }
            }
        }
    };
    let model = dominant_coeffs(&profile)?;
    Ok(HypothesisReport {
        m1,
        m2,
        mt1,
        mt2,
        epsilon0,
        delta_l,
        alpha,
        layers,
        leading_frequency: model.leading_frequency(),
        trailing_frequency: model.trailing_frequency(),
        dependence,
        epsilon0_bound,
        case_verdict,
    })
}

fn gate(epsilon0: f64, bound: f64, verdict: CaseVerdict) -> CaseVerdict {
    if epsilon0 <= bound {
        verdict
    } else {
        CaseVerdict::Inapplicable(format!("ε₀ bound violated: {epsilon0} > {bound}"))
    }
}
