use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::solve_ivp_sampled;
use crate::profiles::RefractiveProfile;
use crate::quad::gauss_on;

/// Gauss points per subinterval.
const GAUSS_POINTS: usize = 64;

/// Local tolerance of the trajectories feeding the quadrature.
const TRAJECTORY_TOL: f64 = 1e-12;

/// Defect of `k² ∫₀^upper (n₂ − n₁) y₁ y₂ = y₁'(1) y₂(1) − y₁(1) y₂'(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangeDefect {
    pub absolute: f64,
    /// `absolute / max(1, |y₁' y₂| + |y₁ y₂'|)`.
    pub relative: f64,
    pub integral_side: Complex64,
    pub boundary_side: Complex64,
}

pub fn lagrange_residual(
    p1: &RefractiveProfile,
    p2: &RefractiveProfile,
    k: Complex64,
    upper: f64,
) -> Result<LagrangeDefect> {
    if !(upper > 0.0 && upper <= 1.0) {
        return Err(Error::Precondition(format!("upper must lie in (0, 1], got {upper}")));
    }
    let mut cuts = vec![0.0, upper];
    cuts.extend(p1.breakpoints().into_iter().chain(p2.breakpoints()).filter(|&r| r < upper));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let (x, wt) = gauss_on(w[0], w[1], GAUSS_POINTS);
        nodes.extend(x);
        weights.extend(wt);
    }
    let (end1, s1) = solve_ivp_sampled(p1, k, &nodes, TRAJECTORY_TOL)?;
    let (end2, s2) = solve_ivp_sampled(p2, k, &nodes, TRAJECTORY_TOL)?;
    if s1.len() != nodes.len() || s2.len() != nodes.len() {
        return Err(Error::Quadrature { a: 0.0, b: upper });
    }
    let integral: Complex64 = nodes
        .iter()
        .zip(&weights)
        .zip(s1.iter().zip(&s2))
        .map(|((&r, &w), (a, b))| a.y * b.y * (w * (p2.value(r) - p1.value(r))))
        .sum();
    let integral_side = k * k * integral;
    let boundary_side = end1.yp * end2.y - end1.y * end2.yp;
    let absolute = (integral_side - boundary_side).norm();
    let scale = 1f64.max((end1.yp * end2.y).norm() + (end1.y * end2.yp).norm());
    Ok(LagrangeDefect {
        absolute,
        relative: absolute / scale,
        integral_side,
        boundary_side,
    })
}
