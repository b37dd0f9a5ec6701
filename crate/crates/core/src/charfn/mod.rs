//! The characteristic function `d(k) = −y(1) cos k + y'(1) sin k / k`, its
//! closed two-layer form, dominant-term models and the Wronskian identity.

mod dominant;
mod lagrange;
mod remainder;
mod sweep;

pub use dominant::{dominant_coeffs, dominant_eval, dominant_eval_scaled, DominantTermModel, SolutionModel};
pub use lagrange::{lagrange_residual, LagrangeDefect};
pub use remainder::{remainder_constant, RemainderFit};
pub use sweep::{sweep, SweepRow, SWEEP_HEADER};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{cos_scaled, sinc, sinc_scaled, ScaledComplex, ZERO};
use crate::error::{Error, Result};
use crate::ode::{solve_ivp, solve_ivp_scaled};
use crate::profiles::RefractiveProfile;

/// Below this `|k|` the analytic limit `d(0) = 0` is returned.
pub const SMALL_K: f64 = 1e-8;

/// Largest exponent an unscaled value may carry before `f64` overflows.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicValue {
    pub k: Complex64,
    pub d: Complex64,
    pub y1: Complex64,
    pub yp1: Complex64,
    /// Set when `k` is inside the small-`|k|` limit region.
    pub degenerate: bool,
}

impl CharacteristicValue {
    /// Recomputes `d` from `y(1)` and `y'(1)`.
    pub fn rebuild(&self) -> Complex64 {
        assemble(self.k, self.y1, self.yp1)
    }
}

fn assemble(k: Complex64, y1: Complex64, yp1: Complex64) -> Complex64 {
    -y1 * k.cos() + yp1 * sinc(k)
}

pub fn d_of_k(profile: &RefractiveProfile, k: Complex64) -> Result<CharacteristicValue> {
    let exponent = k.im.abs() * (1.0 + profile.delta_l());
    if exponent > MAX_EXPONENT {
        return Err(Error::Overflow(format!("{k}")));
    }
    let s = solve_ivp(profile, k)?;
    let degenerate = k.norm() < SMALL_K;
    let d = if degenerate { ZERO } else { assemble(k, s.y, s.yp) };
    Ok(CharacteristicValue {
        k,
        d,
        y1: s.y,
        yp1: s.yp,
        degenerate,
    })
}

/// `d(k)` as mantissa and log scale; usable for any finite `k`.
pub fn d_scaled(profile: &RefractiveProfile, k: Complex64) -> Result<ScaledComplex> {
    if k.norm() < SMALL_K {
        return Ok(ScaledComplex::new(ZERO, 0.0));
    }
    let s = solve_ivp_scaled(profile, k)?;
    let mantissa = -s.y * cos_scaled(k) + s.yp * sinc_scaled(k);
    Ok(ScaledComplex::new(mantissa, s.log_scale + k.im.abs()))
}

/// Closed form of `d` for two constant layers `n1` on `[0, R1)` and `n2` on `[R1, 1]`.
pub fn d_two_layer_closed(n1: f64, n2: f64, r1: f64, k: Complex64) -> Complex64 {
    two_layer(n1, n2, r1, k, -1.0)
}

/// [`d_two_layer_closed`] with `+` in front of the `sin·sin` term of `y'(1)`.
///
/// This variant does not solve the ODE; it is kept to quantify how far it is
/// from the true characteristic function.
pub fn d_two_layer_sign_flipped(n1: f64, n2: f64, r1: f64, k: Complex64) -> Complex64 {
    two_layer(n1, n2, r1, k, 1.0)
}

fn two_layer(n1: f64, n2: f64, r1: f64, k: Complex64, cross_sign: f64) -> Complex64 {
    let (s1, s2) = (n1.sqrt(), n2.sqrt());
    let a = k * s1 * r1;
    let b = k * s2 * (1.0 - r1);
    let yp1 = a.cos() * b.cos() + (a.sin() * b.sin()) * (cross_sign * s2 / s1);
    let y1 = a.cos() * sinc(b) * (1.0 - r1) + sinc(a) * r1 * b.cos();
    yp1 * sinc(k) - y1 * k.cos()
}

/// `d` of a single constant layer `n`.
pub fn d_constant(n: f64, k: Complex64) -> Complex64 {
    let x = k * n.sqrt();
    -sinc(x) * k.cos() + x.cos() * sinc(k)
}
