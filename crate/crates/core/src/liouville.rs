//! Per-layer Liouville transform `ξ = δ_{l-1} + ∫ √n`, `y = z / n^{1/4}`,
//! turning `y'' + k² n y = 0` into `z'' + (k² − p(ξ)) z = 0`.
//!
//! Solving in the transformed variables gives an oracle for the direct
//! integrator that shares nothing with it except the Runge–Kutta stepper.

use std::cell::Cell;

use num_complex::Complex64;

use crate::cmath::sinc;
use crate::error::{Error, Result};
use crate::ode::{dopri5, ScaledState, StateVector, DEFAULT_TOL};
use crate::profiles::{segment_sqrt_integral, Law, RefractiveProfile};

/// Convergence tolerance of the inverse coordinate map.
const INVERSE_TOL: f64 = 1e-12;

/// Coordinate map and potential of one layer.
#[derive(Debug, Clone)]
pub struct LiouvilleChart {
    pub index: usize,
    pub r_start: f64,
    pub r_end: f64,
    /// `ξ` at `r_start`.
    pub delta_start: f64,
    /// `ξ` at `r_end`.
    pub delta_end: f64,
    law: Law,
}

pub fn build_chart(profile: &RefractiveProfile, l: usize) -> Result<LiouvilleChart> {
    let seg = profile.segments().get(l).ok_or_else(|| {
        Error::Precondition(format!(
            "segment index {l} out of range for {} layers",
            profile.layer_count()
        ))
    })?;
    let delta_start = profile.delta_integral(0.0, seg.start)?;
    let delta_end = delta_start + segment_sqrt_integral(&seg.law, seg.start, seg.end)?;
    Ok(LiouvilleChart {
        index: l,
        r_start: seg.start,
        r_end: seg.end,
        delta_start,
        delta_end,
        law: seg.law.clone(),
    })
}

impl LiouvilleChart {
    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn xi_of_r(&self, r: f64) -> Result<f64> {
        let r = r.clamp(self.r_start, self.r_end);
        Ok(self.delta_start + segment_sqrt_integral(&self.law, self.r_start, r)?)
    }

    /// Inverse of [`xi_of_r`](Self::xi_of_r): Newton steps kept inside a bisection bracket.
    pub fn r_of_xi(&self, xi: f64) -> Result<f64> {
        let xi = xi.clamp(self.delta_start, self.delta_end);
        if let Some(n) = self.law.constant_value() {
            return Ok((self.r_start + (xi - self.delta_start) / n.sqrt()).min(self.r_end));
        }
        let (mut lo, mut hi) = (self.r_start, self.r_end);
        let frac = (xi - self.delta_start) / (self.delta_end - self.delta_start);
        let mut r = self.r_start + frac * (self.r_end - self.r_start);
        for _ in 0..200 {
            let f = self.xi_of_r(r)? - xi;
            if f.abs() <= INVERSE_TOL {
                return Ok(r);
            }
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            if hi - lo <= INVERSE_TOL {
                break;
            }
            let newton = r - f / self.law.value(r).sqrt();
            r = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(r)
    }

    /// `p = n''/(4n²) − 5n'²/(16n³)` at radius `r`.
    pub fn potential_at_r(&self, r: f64) -> Result<f64> {
        if self.law.constant_value().is_some() {
            return Ok(0.0);
        }
        let n = self.law.eval(r, 0)?;
        let n1 = self.law.eval(r, 1)?;
        let n2 = self.law.eval(r, 2)?;
        Ok(n2 / (4.0 * n * n) - 5.0 * n1 * n1 / (16.0 * n * n * n))
    }

    pub fn potential(&self, xi: f64) -> Result<f64> {
        self.potential_at_r(self.r_of_xi(xi)?)
    }

    /// `n^{1/4}` and its `r`-derivative `n'/(4 n^{3/4})`.
    fn quarter_power(&self, r: f64) -> Result<(f64, f64)> {
        let n = self.law.eval(r, 0)?;
        let n1 = self.law.eval(r, 1)?;
        Ok((n.powf(0.25), n1 / (4.0 * n.powf(0.75))))
    }

    /// Initial data `(z, z_ξ)` at `δ_{l-1}` of basis 1 or 2.
    pub fn basis_initial(&self, which: u8) -> Result<(f64, f64)> {
        let n = self.law.eval(self.r_start, 0)?;
        let n1 = self.law.eval(self.r_start, 1)?;
        match which {
            1 => Ok((0.0, n.powf(-0.25))),
            2 => Ok((n.powf(0.25), n1 / (4.0 * n.powf(1.25)))),
            _ => Err(Error::Precondition(format!("basis index must be 1 or 2, got {which}"))),
        }
    }

    /// Solves the `z` equation from `δ_{l-1}` with data `(z0, z0')` up to `xi`.
    fn solve_z(&self, k: Complex64, z0: Complex64, dz0: Complex64, xi: f64, tol: f64) -> Result<(Complex64, Complex64)> {
        let span = xi - self.delta_start;
        if self.law.constant_value().is_some() {
            let x = k * span;
            let c = x.cos();
            let s = sinc(x);
            return Ok((c * z0 + s * span * dz0, -k * k * span * s * z0 + c * dz0));
        }
        if span <= 0.0 {
            return Ok((z0, dz0));
        }
        let k2 = k * k;
        let start = ScaledState {
            y: z0,
            yp: dz0,
            log_scale: 0.0,
            r: self.delta_start,
        };
        let failure = Cell::new(None);
        let end = dopri5(
            |t, z: &[Complex64; 2]| {
                let p = self.potential(t).unwrap_or_else(|_| {
                    failure.set(Some(t));
                    f64::NAN
                });
                [z[1], -(k2 - p) * z[0]]
            },
            self.delta_start,
            xi,
            start,
            tol,
            &[],
            |_| {},
        );
        if let Some(t) = failure.get() {
            return Err(Error::NonFinite { r: self.r_of_xi(t)? });
        }
        let end = end?;
        let plain = end.to_plain().ok_or(Error::NonFinite { r: self.r_end })?;
        Ok((plain.y, plain.yp))
    }

    /// Basis solution `z_{l,which}` and its `ξ`-derivative at `xi`.
    pub fn z_basis(&self, k: Complex64, which: u8, xi: f64) -> Result<(Complex64, Complex64)> {
        let (z0, dz0) = self.basis_initial(which)?;
        self.solve_z(k, z0.into(), dz0.into(), xi, DEFAULT_TOL)
    }

    /// Propagates `(y, y')` across the layer through the `z` equation.
    pub fn transfer(&self, k: Complex64, state: StateVector, tol: f64) -> Result<StateVector> {
        let (z1_0, dz1_0) = self.basis_initial(1)?;
        let (z2_0, dz2_0) = self.basis_initial(2)?;
        // b1 = y'(R_{l-1}), b2 = y(R_{l-1})
        let z0 = state.yp * z1_0 + state.y * z2_0;
        let dz0 = state.yp * dz1_0 + state.y * dz2_0;
        let (z, dz) = self.solve_z(k, z0, dz0, self.delta_end, tol)?;
        let (m, m_r) = self.quarter_power(self.r_end)?;
        let sqrt_n = m * m;
        let y = z / m;
        let mut yp = dz * sqrt_n / m;
        if m_r != 0.0 {
            yp -= z * m_r / (m * m);
        }
        Ok(StateVector::new(y, yp, self.r_end))
    }
}

/// `(y(1), y'(1))` through the Liouville variables of every layer.
pub fn transform_solve(profile: &RefractiveProfile, k: Complex64) -> Result<StateVector> {
    transform_solve_with_tol(profile, k, DEFAULT_TOL)
}

pub fn transform_solve_with_tol(profile: &RefractiveProfile, k: Complex64, tol: f64) -> Result<StateVector> {
    let mut state = StateVector::initial();
    for l in 0..profile.layer_count() {
        state = build_chart(profile, l)?.transfer(k, state, tol)?;
    }
    Ok(state)
}

/// Leading large-`|k|` term of basis `which` at `xi`.
pub fn z_leading_order(chart: &LiouvilleChart, k: Complex64, which: u8, xi: f64) -> Result<Complex64> {
    let m0 = chart.law.eval(chart.r_start, 0)?.powf(0.25);
    let phase = k * (xi - chart.delta_start);
    match which {
        1 => Ok(phase.sin() / (k * m0)),
        2 => Ok(phase.cos() * m0),
        _ => Err(Error::Precondition(format!("basis index must be 1 or 2, got {which}"))),
    }
}
