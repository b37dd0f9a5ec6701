use serde::{Deserialize, Serialize};

use super::RefractiveProfile;
use crate::error::{Error, Result};

/// Bisection width for located sign changes.
const REFINE_TOL: f64 = 1e-10;

/// Differences below this are treated as zero.
const ZERO_TOL: f64 = 1e-14;

/// Points `0 = x_0 < … < x_S = 1` and the sign of `p1 − p2` on each open interval.
///
/// The result is only as fine as the sampling grid: sign changes narrower than
/// one grid cell can be missed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPartition {
    pub points: Vec<f64>,
    pub signs: Vec<i8>,
    pub grid: usize,
}

fn sign_of(v: f64) -> i8 {
    if v.abs() <= ZERO_TOL {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

pub fn m_sign_partition(
    p1: &RefractiveProfile,
    p2: &RefractiveProfile,
    grid: usize,
) -> Result<SignPartition> {
    if grid < 2 {
        return Err(Error::Precondition(format!("grid must be >= 2, got {grid}")));
    }
    let sign_at = |r: f64| sign_of(p1.value(r) - p2.value(r));
    // cell midpoints avoid landing exactly on interfaces
    let samples: Vec<(f64, i8)> = (0..grid)
        .map(|i| {
            let r = (i as f64 + 0.5) / grid as f64;
            (r, sign_at(r))
        })
        .collect();
    let changes = samples.windows(2).filter(|w| w[0].1 != w[1].1).count();
    if changes > grid / 2 {
        return Err(Error::Unresolvable { grid, changes });
    }
    let mut points = vec![0.0];
    let mut signs = vec![samples[0].1];
    for w in samples.windows(2) {
        let ((mut lo, s_lo), (mut hi, s_hi)) = (w[0], w[1]);
        if s_lo == s_hi {
            continue;
        }
        while hi - lo > REFINE_TOL {
            let mid = 0.5 * (lo + hi);
            if sign_at(mid) == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        points.push(0.5 * (lo + hi));
        signs.push(s_hi);
    }
    points.push(1.0);
    Ok(SignPartition {
        points,
        signs,
        grid,
    })
}
