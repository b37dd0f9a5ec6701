//! Propagation of `(y, y')` for `y'' + k² n(r) y = 0`, `y(0) = 0`, `y'(0) = 1`.
//!
//! Constant segments use exact transfer matrices. Variable segments use an
//! embedded Dormand–Prince 5(4) pair on the complex first-order system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmath::{cos_scaled, sinc, sinc_scaled, ONE, ZERO};
use crate::error::{Error, Result};
use crate::profiles::{RefractiveProfile, Segment};

/// Default local error tolerance of the adaptive integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Initial step is `(end − start) / INITIAL_DIVISIONS`.
const INITIAL_DIVISIONS: f64 = 64.0;

const MAX_STEPS: usize = 2_000_000;

/// Mantissas are renormalized once they leave `[1/RESCALE, RESCALE]`.
const RESCALE: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub y: Complex64,
    pub yp: Complex64,
    pub r: f64,
}

impl StateVector {
    pub fn new(y: Complex64, yp: Complex64, r: f64) -> Self {
        Self { y, yp, r }
    }

    /// `y(0) = 0`, `y'(0) = 1`.
    pub fn initial() -> Self {
        Self::new(ZERO, ONE, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.y.is_finite() && self.yp.is_finite()
    }
}

/// State stored as `(y, y') · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub y: Complex64,
    pub yp: Complex64,
    pub log_scale: f64,
    pub r: f64,
}

impl ScaledState {
    fn from_plain(s: StateVector) -> Self {
        Self {
            y: s.y,
            yp: s.yp,
            log_scale: 0.0,
            r: s.r,
        }
    }

    fn renormalize(&mut self) {
        let m = self.y.norm().max(self.yp.norm());
        if m > 0.0 && m.is_finite() && !(1.0 / RESCALE..=RESCALE).contains(&m) {
            self.y /= m;
            self.yp /= m;
            self.log_scale += m.ln();
        }
    }

    /// Unscaled state; `None` when it does not fit in `f64`.
    pub fn to_plain(&self) -> Option<StateVector> {
        let f = self.log_scale.exp();
        let s = StateVector::new(self.y * f, self.yp * f, self.r);
        s.is_finite().then_some(s)
    }
}

/// 2×2 transfer matrix acting on `(y, y')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub m: [[Complex64; 2]; 2],
}

impl Propagator {
    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn apply(&self, y: Complex64, yp: Complex64) -> (Complex64, Complex64) {
        (
            self.m[0][0] * y + self.m[0][1] * yp,
            self.m[1][0] * y + self.m[1][1] * yp,
        )
    }

    /// `next ∘ self`: first `self`, then `next`.
    pub fn then(&self, next: &Propagator) -> Propagator {
        let a = &next.m;
        let b = &self.m;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Propagator { m }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// Exact transfer matrix of a constant layer `n` of width `length`.
pub fn propagate_constant(n_value: f64, length: f64, k: Complex64) -> Propagator {
    let x = k * n_value.sqrt() * length;
    let c = x.cos();
    let s = sinc(x);
    Propagator {
        m: [[c, s * length], [-k * k * n_value * length * s, c]],
    }
}

/// Transfer matrix scaled by `exp(-|Im x|)`, `x = k√n·length`; returns the matrix and `|Im x|`.
pub fn propagate_constant_scaled(n_value: f64, length: f64, k: Complex64) -> (Propagator, f64) {
    let x = k * n_value.sqrt() * length;
    let c = cos_scaled(x);
    let s = sinc_scaled(x);
    (
        Propagator {
            m: [[c, s * length], [-k * k * n_value * length * s, c]],
        },
        x.im.abs(),
    )
}

/// `(sin k / k, cos k)`, the `n ≡ 1` solution at `r = 1`.
pub fn free_solution(k: Complex64) -> (Complex64, Complex64) {
    (sinc(k), k.cos())
}

type Pair = [Complex64; 2];

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(x: &Pair, terms: &[(f64, &Pair)], h: f64) -> Pair {
    let mut out = *x;
    for (c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

/// Adaptive DOPRI5 for a linear complex 2-system on `[t0, t1]`.
///
/// The state is carried with a log scale so exponentially growing solutions stay
/// representable. Steps are clipped to land on every point of `samples`
/// (ascending, inside `[t0, t1]`); `on_sample` receives the state there.
pub(crate) fn dopri5<F, S>(
    rhs: F,
    t0: f64,
    t1: f64,
    start: ScaledState,
    tol: f64,
    samples: &[f64],
    mut on_sample: S,
) -> Result<ScaledState>
where
    F: Fn(f64, &Pair) -> Pair,
    S: FnMut(ScaledState),
{
    let mut x: Pair = [start.y, start.yp];
    let mut log_scale = start.log_scale;
    let mut t = t0;
    let span = t1 - t0;
    let mut h = span / INITIAL_DIVISIONS;
    let h_min = 1e-14 * span.abs().max(1e-300);
    let mut next_sample = samples.iter().position(|&s| s > t0).unwrap_or(samples.len());
    for &s in samples.iter().take(next_sample) {
        if s == t0 {
            on_sample(ScaledState {
                y: x[0],
                yp: x[1],
                log_scale,
                r: t0,
            });
        }
    }
    let mut k1 = rhs(t, &x);
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepUnderflow { r: t });
        }
        let target = samples.get(next_sample).copied().unwrap_or(t1).min(t1);
        let mut step = h.min(target - t);
        let landing = step >= target - t;
        if landing {
            step = target - t;
        }
        let k2 = rhs(t + C2 * step, &axpy(&x, &[(A21, &k1)], step));
        let k3 = rhs(t + C3 * step, &axpy(&x, &[(A31, &k1), (A32, &k2)], step));
        let k4 = rhs(
            t + C4 * step,
            &axpy(&x, &[(A41, &k1), (A42, &k2), (A43, &k3)], step),
        );
        let k5 = rhs(
            t + C5 * step,
            &axpy(&x, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], step),
        );
        let k6 = rhs(
            t + step,
            &axpy(
                &x,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                step,
            ),
        );
        let x_new = axpy(
            &x,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            step,
        );
        let t_new = if landing { target } else { t + step };
        let k7 = rhs(t_new, &x_new);
        let mut err = 0.0_f64;
        for i in 0..2 {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * step;
            let scale = tol * (1.0 + x[i].norm().max(x_new[i].norm()));
            err = err.max(e.norm() / scale);
        }
        if !err.is_finite() || !x_new[0].is_finite() || !x_new[1].is_finite() {
            if step <= h_min {
                return Err(Error::NonFinite { r: t });
            }
            h = 0.25 * step;
            continue;
        }
        if err <= 1.0 {
            t = t_new;
            x = x_new;
            k1 = k7;
            let m = x[0].norm().max(x[1].norm());
            if m > RESCALE {
                x[0] /= m;
                x[1] /= m;
                k1[0] /= m;
                k1[1] /= m;
                log_scale += m.ln();
            }
            if landing && next_sample < samples.len() && t == samples[next_sample] {
                while next_sample < samples.len() && samples[next_sample] <= t {
                    on_sample(ScaledState {
                        y: x[0],
                        yp: x[1],
                        log_scale,
                        r: t,
                    });
                    next_sample += 1;
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a clipped landing step says nothing about the natural step size
            if !landing || factor < 1.0 {
                h = step * factor;
            }
        } else {
            if step <= h_min {
                return Err(Error::StepUnderflow { r: t });
            }
            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(ScaledState {
        y: x[0],
        yp: x[1],
        log_scale,
        r: t1,
    })
}

/// Integrates a variable segment from `state_in` (at `segment.start`) to `segment.end`.
///
/// Constant laws delegate to [`propagate_constant`].
pub fn integrate_variable(
    segment: &Segment,
    k: Complex64,
    state_in: StateVector,
    tol: f64,
) -> Result<StateVector> {
    if let Some(n) = segment.law.constant_value() {
        let (y, yp) = propagate_constant(n, segment.len(), k).apply(state_in.y, state_in.yp);
        return Ok(StateVector::new(y, yp, segment.end));
    }
    let out = integrate_segment_scaled(segment, k, ScaledState::from_plain(state_in), tol, &[], |_| {})?;
    out.to_plain().ok_or(Error::NonFinite { r: segment.end })
}

fn integrate_segment_scaled<S: FnMut(ScaledState)>(
    segment: &Segment,
    k: Complex64,
    state_in: ScaledState,
    tol: f64,
    samples: &[f64],
    mut on_sample: S,
) -> Result<ScaledState> {
    if let Some(n) = segment.law.constant_value() {
        for &r in samples {
            let (p, growth) = propagate_constant_scaled(n, r - segment.start, k);
            let (y, yp) = p.apply(state_in.y, state_in.yp);
            on_sample(ScaledState {
                y,
                yp,
                log_scale: state_in.log_scale + growth,
                r,
            });
        }
        let (p, growth) = propagate_constant_scaled(n, segment.len(), k);
        let (y, yp) = p.apply(state_in.y, state_in.yp);
        let mut out = ScaledState {
            y,
            yp,
            log_scale: state_in.log_scale + growth,
            r: segment.end,
        };
        out.renormalize();
        return Ok(out);
    }
    let k2 = k * k;
    let law = &segment.law;
    dopri5(
        |r, x: &Pair| [x[1], -k2 * law.value(r) * x[0]],
        segment.start,
        segment.end,
        state_in,
        tol,
        samples,
        on_sample,
    )
}

/// `(y(1), y'(1))` with the default tolerance.
pub fn solve_ivp(profile: &RefractiveProfile, k: Complex64) -> Result<StateVector> {
    solve_ivp_with_tol(profile, k, DEFAULT_TOL)
}

pub fn solve_ivp_with_tol(profile: &RefractiveProfile, k: Complex64, tol: f64) -> Result<StateVector> {
    if profile.is_piecewise_constant() {
        let mut s = StateVector::initial();
        for seg in profile.segments() {
            let n = seg.law.constant_value().unwrap_or(1.0);
            let (y, yp) = propagate_constant(n, seg.len(), k).apply(s.y, s.yp);
            s = StateVector::new(y, yp, seg.end);
        }
        return if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::NonFinite { r: 1.0 })
        };
    }
    let scaled = solve_ivp_scaled_with_tol(profile, k, tol)?;
    scaled.to_plain().ok_or(Error::NonFinite { r: 1.0 })
}

/// Whole-interval propagator of a piecewise-constant profile.
pub fn whole_propagator(profile: &RefractiveProfile, k: Complex64) -> Option<Propagator> {
    let mut p = Propagator::identity();
    for seg in profile.segments() {
        p = p.then(&propagate_constant(seg.law.constant_value()?, seg.len(), k));
    }
    Some(p)
}

/// `(y(1), y'(1))` with a separate log scale; finite for any finite `k`.
pub fn solve_ivp_scaled(profile: &RefractiveProfile, k: Complex64) -> Result<ScaledState> {
    solve_ivp_scaled_with_tol(profile, k, DEFAULT_TOL)
}

pub fn solve_ivp_scaled_with_tol(
    profile: &RefractiveProfile,
    k: Complex64,
    tol: f64,
) -> Result<ScaledState> {
    let mut s = ScaledState::from_plain(StateVector::initial());
    for seg in profile.segments() {
        s = integrate_segment_scaled(seg, k, s, tol, &[], |_| {})?;
    }
    Ok(s)
}

/// Solves to `r = 1` and returns the states at every node of `nodes` (ascending, in `[0, 1]`).
pub fn solve_ivp_sampled(
    profile: &RefractiveProfile,
    k: Complex64,
    nodes: &[f64],
    tol: f64,
) -> Result<(StateVector, Vec<StateVector>)> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut s = ScaledState::from_plain(StateVector::initial());
    let segs = profile.segments();
    let mut failed = None;
    for (i, seg) in segs.iter().enumerate() {
        let last = i + 1 == segs.len();
        let local: Vec<f64> = nodes
            .iter()
            .copied()
            .filter(|&r| r >= seg.start && (r < seg.end || (last && r <= seg.end)))
            .collect();
        s = integrate_segment_scaled(seg, k, s, tol, &local, |st| match st.to_plain() {
            Some(p) => out.push(p),
            None => failed = Some(st.r),
        })?;
    }
    if let Some(r) = failed {
        return Err(Error::NonFinite { r });
    }
    let end = s.to_plain().ok_or(Error::NonFinite { r: 1.0 })?;
    Ok((end, out))
}
