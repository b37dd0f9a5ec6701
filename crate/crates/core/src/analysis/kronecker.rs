use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How `kronecker_search` walks the `t` axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KroneckerStrategy {
    /// Uniform grid with step `eps1 / (4 max |v_j|)`.
    Grid,
    /// Visits only the windows where the fastest coordinate is within `eps1` of its target
    /// and intersects the other constraints exactly.
    #[default]
    Windows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerHit {
    pub t: f64,
    pub p: Vec<i64>,
    /// `|t v_j − p_j − a_j|`.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KroneckerOutcome {
    Found(KroneckerHit),
    NotFound { t_cap: f64 },
}

impl KroneckerOutcome {
    pub fn hit(self) -> Result<KroneckerHit> {
        match self {
            KroneckerOutcome::Found(h) => Ok(h),
            KroneckerOutcome::NotFound { t_cap } => Err(Error::KroneckerNotFound { t_cap }),
        }
    }
}

fn residuals(t: f64, v: &[f64], a: &[f64]) -> (Vec<i64>, Vec<f64>) {
    v.iter()
        .zip(a)
        .map(|(&vj, &aj)| {
            let p = (t * vj - aj).round();
            (p as i64, (t * vj - p - aj).abs())
        })
        .unzip()
}

fn accept(t: f64, v: &[f64], a: &[f64], eps1: f64) -> Option<KroneckerHit> {
    let (p, residuals) = residuals(t, v, a);
    residuals
        .iter()
        .all(|&r| r < eps1)
        .then_some(KroneckerHit { t, p, residuals })
}

/// Smallest `t` in `(t_min, t_cap]` found with `|t v_j − p_j − a_j| < eps1` for all `j`.
pub fn kronecker_search(
    v: &[f64],
    a: &[f64],
    eps1: f64,
    t_min: f64,
    t_cap: f64,
    strategy: KroneckerStrategy,
) -> Result<KroneckerOutcome> {
    if v.is_empty() || v.len() != a.len() || v.iter().any(|x| *x == 0.0 || !x.is_finite()) {
        return Err(Error::Precondition("v and a must be non-empty, equally long, v nonzero".into()));
    }
    if !(eps1 > 0.0) || !(t_cap > t_min) {
        return Err(Error::Precondition(format!("need eps1 > 0 and t_cap > T, got {eps1}, {t_min}, {t_cap}")));
    }
    let found = match strategy {
        KroneckerStrategy::Grid => grid(v, a, eps1, t_min, t_cap),
        KroneckerStrategy::Windows => windows(v, a, eps1, t_min, t_cap),
    };
    Ok(match found {
        Some(hit) => KroneckerOutcome::Found(hit),
        None => KroneckerOutcome::NotFound { t_cap },
    })
}

fn grid(v: &[f64], a: &[f64], eps1: f64, t_min: f64, t_cap: f64) -> Option<KroneckerHit> {
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let step = eps1 / (4.0 * vmax);
    let count = ((t_cap - t_min) / step).floor() as u64;
    (1..=count)
        .into_par_iter()
        .find_map_first(|i| accept(t_min + i as f64 * step, v, a, eps1))
}

fn windows(v: &[f64], a: &[f64], eps1: f64, t_min: f64, t_cap: f64) -> Option<KroneckerHit> {
    let pivot = (0..v.len()).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()))?;
    let (vp, ap) = (v[pivot], a[pivot]);
    // window centres (p + a)/v lie in (t_min, t_cap]; order them by t
    let lo = ((t_min * vp - ap).min(t_cap * vp - ap)).floor() as i64;
    let hi = ((t_min * vp - ap).max(t_cap * vp - ap)).ceil() as i64;
    let half = eps1 / vp.abs();
    let centre = |i: i64| {
        let p = if vp > 0.0 { lo + i } else { hi - i };
        (p as f64 + ap) / vp
    };
    (0..=(hi - lo)).into_par_iter().find_map_first(|i| {
        let c = centre(i);
        if c <= t_min || c > t_cap {
            return None;
        }
        let mut interval = (c - half, c + half);
        for (j, (&vj, &aj)) in v.iter().zip(a).enumerate() {
            if j == pivot {
                continue;
            }
            let target = (c * vj - aj).round();
            let best = [-1.0, 0.0, 1.0]
                .iter()
                .filter_map(|d| {
                    let (x, y) = ((target + d + aj - eps1) / vj, (target + d + aj + eps1) / vj);
                    let (l, r) = (x.min(y).max(interval.0), x.max(y).min(interval.1));
                    (l < r).then_some((l, r))
                })
                .next()?;
            interval = best;
        }
        let t = minimax(interval, v, a).max(f64::MIN_POSITIVE);
        (t > t_min && t <= t_cap).then(|| accept(t, v, a, eps1)).flatten()
    })
}

/// Point of `[l, r]` minimising the largest residual; the objective is convex on the interval.
fn minimax((mut l, mut r): (f64, f64), v: &[f64], a: &[f64]) -> f64 {
    let worst = |t: f64| residuals(t, v, a).1.into_iter().fold(0.0, f64::max);
    for _ in 0..100 {
        let m1 = l + (r - l) / 3.0;
        let m2 = r - (r - l) / 3.0;
        if worst(m1) <= worst(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    0.5 * (l + r)
}
