use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{refuse_degenerate, EigenvalueSet, K_FLOOR};
use crate::charfn::d_of_k;
use crate::error::{Error, Result};
use crate::profiles::RefractiveProfile;

const BISECT_TOL: f64 = 1e-12;

/// Sub-samples per scan cell used to detect more than one sign change.
const CELL_SUBSAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealScan {
    pub k_floor: f64,
    /// Scan step as a fraction of `π/(1 + δ_L)`.
    pub step_fraction: f64,
    /// Also report minima of `|d|` that touch zero without a sign change.
    pub detect_even: bool,
}

impl Default for RealScan {
    fn default() -> Self {
        Self {
            k_floor: K_FLOOR,
            step_fraction: 1.0 / 8.0,
            detect_even: false,
        }
    }
}

pub fn real_eigs(profile: &RefractiveProfile, k_max: f64) -> Result<EigenvalueSet> {
    real_eigs_with(profile, k_max, RealScan::default())
}

pub fn real_eigs_with(profile: &RefractiveProfile, k_max: f64, opts: RealScan) -> Result<EigenvalueSet> {
    refuse_degenerate(profile)?;
    if !(k_max > opts.k_floor) {
        return Err(Error::Precondition(format!(
            "k_max = {k_max} must exceed k_floor = {}",
            opts.k_floor
        )));
    }
    let d = |k: f64| -> Result<f64> { Ok(d_of_k(profile, Complex64::new(k, 0.0))?.d.re) };
    let step = opts.step_fraction * PI / (1.0 + profile.delta_l());
    let cells = ((k_max - opts.k_floor) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=cells)
        .map(|i| (opts.k_floor + i as f64 * step).min(k_max))
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&k| d(k)).collect::<Result<_>>()?;

    let found: Vec<CellResult> = (0..cells)
        .into_par_iter()
        .map(|i| scan_cell(&d, grid[i], grid[i + 1], values[i], values[i + 1], i == 0, opts.detect_even))
        .collect::<Result<_>>()?;

    let mut set = EigenvalueSet::default();
    let mut zeros: Vec<(f64, f64)> = Vec::new();
    for (z, w) in found {
        zeros.extend(z);
        set.warnings.extend(w);
    }
    zeros.sort_by(|a, b| a.0.total_cmp(&b.0));
    zeros.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-10);
    set.real_zeros = zeros.iter().map(|z| z.0).collect();
    set.real_residuals = zeros.iter().map(|z| z.1).collect();
    Ok(set)
}

type CellResult = (Vec<(f64, f64)>, Vec<String>);

fn scan_cell<F: Fn(f64) -> Result<f64>>(
    d: &F,
    a: f64,
    b: f64,
    da: f64,
    db: f64,
    first: bool,
    detect_even: bool,
) -> Result<CellResult> {
    let mut zeros = Vec::new();
    let mut warnings = Vec::new();
    if da == 0.0 && first {
        zeros.push((a, 0.0));
    }
    if db == 0.0 {
        zeros.push((b, 0.0));
        return Ok((zeros, warnings));
    }
    // finer look inside the cell catches pairs of sign changes the coarse grid missed
    let mut xs = vec![a];
    let mut vs = vec![da];
    for j in 1..CELL_SUBSAMPLES {
        let x = a + (b - a) * j as f64 / CELL_SUBSAMPLES as f64;
        xs.push(x);
        vs.push(d(x)?);
    }
    xs.push(b);
    vs.push(db);
    let mut brackets = Vec::new();
    for j in 0..CELL_SUBSAMPLES {
        if vs[j] == 0.0 && j > 0 {
            zeros.push((xs[j], 0.0));
        } else if vs[j] * vs[j + 1] < 0.0 {
            brackets.push((xs[j], xs[j + 1], vs[j]));
        }
    }
    let coarse_changes = (da * db < 0.0) as usize;
    if brackets.len() > coarse_changes {
        warnings.push(format!(
            "{} sign changes in [{a}, {b}] at scan step {}; resolved on a finer grid",
            brackets.len(),
            b - a
        ));
    }
    for (lo, hi, vlo) in brackets {
        let z = bisect(d, lo, hi, vlo)?;
        let polished = polish(d, z, lo, hi)?;
        zeros.push(polished);
    }
    if detect_even {
        for j in 1..CELL_SUBSAMPLES {
            let (l, m, r) = (vs[j - 1].abs(), vs[j].abs(), vs[j + 1].abs());
            if vs[j - 1] * vs[j] > 0.0 && vs[j] * vs[j + 1] > 0.0 && m < l && m < r {
                if let Some(z) = even_zero(d, xs[j - 1], xs[j + 1], l.max(r))? {
                    warnings.push(format!("even-multiplicity zero near {}", z.0));
                    zeros.push(z);
                }
            }
        }
    }
    Ok((zeros, warnings))
}

fn bisect<F: Fn(f64) -> Result<f64>>(d: &F, mut lo: f64, mut hi: f64, mut vlo: f64) -> Result<f64> {
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let vm = d(mid)?;
        if vm == 0.0 {
            return Ok(mid);
        }
        if vm * vlo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            vlo = vm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton with a central-difference slope; a step is kept only if it lowers `|d|` inside the bracket.
fn polish<F: Fn(f64) -> Result<f64>>(d: &F, mut x: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let mut fx = d(x)?;
    for _ in 0..8 {
        if fx == 0.0 {
            break;
        }
        let h = 1e-6 * x.abs().max(1.0);
        let slope = (d(x + h)? - d(x - h)?) / (2.0 * h);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = x - fx / slope;
        if !(next >= lo && next <= hi) {
            break;
        }
        let fn_ = d(next)?;
        if fn_.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fn_;
    }
    Ok((x, fx.abs()))
}

/// Golden-section minimum of `|d|`; reported only if it reaches zero to working precision.
fn even_zero<F: Fn(f64) -> Result<f64>>(d: &F, mut a: f64, mut b: f64, swing: f64) -> Result<Option<(f64, f64)>> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (d(c)?.abs(), d(e)?.abs());
    while b - a > 1e-10 {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = d(c)?.abs();
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = d(e)?.abs();
        }
    }
    let x = 0.5 * (a + b);
    let v = d(x)?.abs();
    Ok((v <= 1e-9 * swing.max(1.0)).then_some((x, v)))
}
