use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{common_scale, refuse_degenerate, scaled_ratio, EigenvalueSet, Zero, K_FLOOR};
use crate::charfn::d_scaled;
use crate::cmath::ScaledComplex;
use crate::error::{Error, Result};
use crate::profiles::RefractiveProfile;

/// Axis-aligned rectangle in the `k` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || !(re_min < re_max) || !(im_min < im_max) {
            return Err(Error::Precondition(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, k: Complex64) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }

    fn grown(&self, pad: f64) -> Rect {
        Rect {
            re_min: self.re_min - pad,
            re_max: self.re_max + pad,
            im_min: self.im_min - pad,
            im_max: self.im_max + pad,
        }
    }

    /// Counter-clockwise corners starting at the lower left.
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Children of a split at the given fraction; long thin cells are halved along their long side only.
    fn split(&self, frac: f64) -> Vec<Rect> {
        let xm = self.re_min + frac * self.width();
        let ym = self.im_min + frac * self.height();
        if self.width() > 2.0 * self.height() {
            vec![Rect { re_max: xm, ..*self }, Rect { re_min: xm, ..*self }]
        } else if self.height() > 2.0 * self.width() {
            vec![Rect { im_max: ym, ..*self }, Rect { im_min: ym, ..*self }]
        } else {
            vec![
                Rect { re_max: xm, im_max: ym, ..*self },
                Rect { re_min: xm, im_max: ym, ..*self },
                Rect { re_min: xm, im_min: ym, ..*self },
                Rect { re_max: xm, im_min: ym, ..*self },
            ]
        }
    }
}

/// Tuning of the argument-principle search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSearch {
    /// Cells below `min_cell · max(1, |center|)` holding several zeros become one cluster.
    pub min_cell: f64,
    /// Outward shift of a boundary that passes through a zero.
    pub perturb: f64,
    pub max_perturb: u32,
    /// Largest phase increment accepted between neighbouring boundary samples.
    pub phase_step: f64,
    pub max_refine: u32,
    pub k_floor: f64,
}

impl Default for ComplexSearch {
    fn default() -> Self {
        Self {
            min_cell: 5e-4,
            perturb: 1e-4,
            max_perturb: 5,
            phase_step: PI / 4.0,
            max_refine: 40,
            k_floor: K_FLOOR,
        }
    }
}

/// Largest change of `ln |d|` accepted between neighbouring boundary samples.
const MAX_LOG_MODULUS_STEP: f64 = 1.0;

/// Relative size of `|d|` below which a boundary sample is indistinguishable from a zero.
const NOISE_FLOOR: f64 = 1e-12;

/// Cells this many times the cluster size give up on splitting when every split line is too close to a zero.
const CLUSTER_SLACK: f64 = 20.0;

/// Off-centre split fractions; a zero on one split line is unlikely to sit on the next.
const SPLIT_FRACTIONS: [f64; 5] = [0.5123, 0.4871, 0.5377, 0.4619, 0.5541];

/// The mantissa of `d` is of order `1/|k|` away from zeros.
fn below_noise(k: Complex64, v: ScaledComplex) -> bool {
    v.mantissa.norm() * k.norm().max(1.0) < NOISE_FLOOR
}

struct Searcher<'a, F> {
    f: &'a F,
    /// Boundary samples per unit length.
    rate: f64,
    opts: ComplexSearch,
}

impl<F> Searcher<'_, F>
where
    F: Fn(Complex64) -> Result<ScaledComplex> + Sync,
{
    fn winding(&self, rect: &Rect) -> Result<i64> {
        let corners = rect.corners();
        let mut total = 0.0;
        for e in 0..4 {
            total += self.edge_phase(corners[e], corners[(e + 1) % 4])?;
        }
        let w = total / (2.0 * PI);
        let r = w.round();
        if (w - r).abs() > 0.1 {
            return Err(Error::ContourThroughZero(format!("winding {w} is not an integer on {rect:?}")));
        }
        Ok(r as i64)
    }

    fn edge_phase(&self, a: Complex64, b: Complex64) -> Result<f64> {
        let n = ((b - a).norm() * self.rate).ceil() as usize + 8;
        let pts: Vec<Complex64> = (0..=n).map(|i| a + (b - a) * (i as f64 / n as f64)).collect();
        let vals: Vec<ScaledComplex> = pts.par_iter().map(|&z| (self.f)(z)).collect::<Result<_>>()?;
        let phases: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| self.segment_phase(pts[i], pts[i + 1], vals[i], vals[i + 1], 0))
            .collect::<Result<_>>()?;
        Ok(phases.iter().sum())
    }

    fn segment_phase(
        &self,
        a: Complex64,
        b: Complex64,
        fa: ScaledComplex,
        fb: ScaledComplex,
        depth: u32,
    ) -> Result<f64> {
        if below_noise(a, fa) || below_noise(b, fb) {
            return Err(Error::ContourThroughZero(format!("|d| at rounding level on the boundary near {a}")));
        }
        let m = 0.5 * (a + b);
        let fm = (self.f)(m)?;
        if below_noise(m, fm) {
            return Err(Error::ContourThroughZero(format!("|d| at rounding level on the boundary near {m}")));
        }
        // the midpoint guards against a whole turn aliasing to a small step
        let (left, right) = (scaled_ratio(fm, fa), scaled_ratio(fb, fm));
        let smooth =
            |r: Complex64| r.arg().abs() <= self.opts.phase_step && r.norm().ln().abs() <= MAX_LOG_MODULUS_STEP;
        if smooth(left) && smooth(right) && (left.arg() + right.arg()).abs() <= self.opts.phase_step {
            return Ok(left.arg() + right.arg());
        }
        if depth >= self.opts.max_refine {
            return Err(Error::ContourThroughZero(format!("phase unresolved between {a} and {b}")));
        }
        Ok(self.segment_phase(a, m, fa, fm, depth + 1)? + self.segment_phase(m, b, fm, fb, depth + 1)?)
    }

    fn min_size(&self, rect: &Rect) -> f64 {
        self.opts.min_cell * rect.center().norm().max(1.0)
    }

    /// Zeros inside `rect`, which holds `count` of them.
    fn search(&self, rect: Rect, count: i64) -> Result<Vec<Zero>> {
        if count <= 0 {
            return Ok(Vec::new());
        }
        let size = rect.width().max(rect.height());
        let small = size < self.min_size(&rect);
        if count == 1 || small {
            let (k, residual, converged) = self.newton(rect.center(), &rect, count as u32)?;
            if small || (converged && rect.contains(k)) {
                return Ok(vec![Zero {
                    k,
                    multiplicity: count as u32,
                    residual,
                }]);
            }
        }
        let mut last_err = None;
        for frac in SPLIT_FRACTIONS {
            let children = rect.split(frac);
            let counts: Result<Vec<i64>> = children.par_iter().map(|c| self.winding(c)).collect();
            match counts {
                Ok(cs) if cs.iter().sum::<i64>() == count && cs.iter().all(|&c| c >= 0) => {
                    let found: Vec<Vec<Zero>> = children
                        .par_iter()
                        .zip(cs.par_iter())
                        .map(|(c, &n)| self.search(*c, n))
                        .collect::<Result<_>>()?;
                    return Ok(found.into_iter().flatten().collect());
                }
                Ok(cs) => {
                    last_err = Some(Error::ContourThroughZero(format!(
                        "child counts {cs:?} do not add up to {count} in {rect:?}"
                    )))
                }
                Err(e) => last_err = Some(e),
            }
        }
        if count > 1 && size < CLUSTER_SLACK * self.min_size(&rect) {
            // a multiple zero smears over a rounding-level disc that every split line crosses
            let (k, residual, _) = self.newton(rect.center(), &rect, count as u32)?;
            return Ok(vec![Zero {
                k,
                multiplicity: count as u32,
                residual,
            }]);
        }
        Err(last_err.unwrap_or_else(|| Error::ContourThroughZero(format!("{rect:?}"))))
    }

    /// Multiplicity-aware Newton with a central-difference derivative, confined near `cell`.
    ///
    /// Returns the point, `|d|` there and whether the last step was negligible.
    fn newton(&self, start: Complex64, cell: &Rect, multiplicity: u32) -> Result<(Complex64, f64, bool)> {
        let fence = cell.grown(0.1 * cell.width().max(cell.height()));
        let size = cell.width().min(cell.height());
        let mut k = start;
        let mut fk = (self.f)(k)?;
        let mut converged = false;
        for _ in 0..60 {
            if fk.mantissa.norm() == 0.0 {
                converged = true;
                break;
            }
            let h = (1e-6 * k.norm().max(1.0)).min(0.25 * size);
            let (vals, _) = common_scale(&[fk, (self.f)(k + h)?, (self.f)(k - h)?]);
            let slope = (vals[1] - vals[2]) / (2.0 * h);
            if slope.norm() == 0.0 || !slope.is_finite() {
                break;
            }
            let step = vals[0] / slope * multiplicity as f64;
            let next = k - step;
            if !fence.contains(next) {
                break;
            }
            let tiny = step.norm() < 1e-10 * k.norm().max(1.0);
            let fnext = (self.f)(next)?;
            if fnext.ln_abs() >= fk.ln_abs() {
                converged = tiny;
                break;
            }
            k = next;
            fk = fnext;
            if tiny {
                converged = true;
                break;
            }
        }
        let residual = fk.value().norm();
        Ok((k, if residual.is_finite() { residual } else { f64::INFINITY }, converged))
    }
}

/// Boundary samples per unit length: the phase of `d` turns at most about `1 + δ_L` per unit.
fn sample_rate(profile: &RefractiveProfile) -> f64 {
    (1.0 + profile.delta_l() + 2.0) * 4.0 / PI
}

/// Number of zeros of `d` inside `rect`, counted with multiplicity.
pub fn winding_number(profile: &RefractiveProfile, rect: &Rect) -> Result<i64> {
    refuse_degenerate(profile)?;
    let f = |k: Complex64| d_scaled(profile, k);
    Searcher {
        f: &f,
        rate: sample_rate(profile),
        opts: ComplexSearch::default(),
    }
    .winding(rect)
}

pub fn complex_eigs(profile: &RefractiveProfile, rect: &Rect) -> Result<EigenvalueSet> {
    complex_eigs_with(profile, rect, ComplexSearch::default())
}

pub fn complex_eigs_with(profile: &RefractiveProfile, rect: &Rect, opts: ComplexSearch) -> Result<EigenvalueSet> {
    refuse_degenerate(profile)?;
    let f = |k: Complex64| d_scaled(profile, k);
    let searcher = Searcher {
        f: &f,
        rate: sample_rate(profile),
        opts,
    };
    let mut warnings = Vec::new();
    let mut region = *rect;
    let mut count = 0;
    for attempt in 0..=opts.max_perturb {
        match searcher.winding(&region) {
            Ok(c) => {
                count = c;
                break;
            }
            Err(Error::ContourThroughZero(msg)) if attempt < opts.max_perturb => {
                warnings.push(format!("boundary grown by {} after: {msg}", opts.perturb));
                region = region.grown(opts.perturb);
            }
            Err(e) => return Err(e),
        }
    }
    let mut zeros = searcher.search(region, count)?;
    zeros.retain(|z| {
        let keep = z.k.norm() >= opts.k_floor;
        if !keep {
            warnings.push(format!("zero at {} below k_floor dropped", z.k));
        }
        keep
    });
    zeros.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    Ok(EigenvalueSet {
        complex_zeros: zeros,
        region: Some(region),
        warnings,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::d_of_k;

    fn n1() -> RefractiveProfile {
        RefractiveProfile::piecewise_constant(&[0.5], &[4.0, 16.0]).unwrap()
    }

    #[test]
    fn isolates_the_quarter_wave_zero() {
        let rect = Rect::new(1.3, 1.9, -0.01, 0.01).unwrap();
        let set = complex_eigs(&n1(), &rect).unwrap();
        assert_eq!(set.complex_zeros.len(), 1);
        let z = set.complex_zeros[0];
        assert_eq!(z.multiplicity, 1);
        assert!((z.k - Complex64::new(PI / 2.0, 0.0)).norm() < 1e-10);
        assert!(z.residual < 1e-9);
    }

    #[test]
    fn empty_rectangle_has_zero_winding() {
        let rect = Rect::new(0.2, 1.0, 0.5, 1.5).unwrap();
        assert_eq!(winding_number(&n1(), &rect).unwrap(), 0);
        assert!(complex_eigs(&n1(), &rect).unwrap().complex_zeros.is_empty());
    }

    #[test]
    fn windings_add_over_disjoint_rectangles() {
        let a = Rect::new(0.5, 2.0, -0.2, 0.3).unwrap();
        let b = Rect::new(2.0, 4.0, -0.2, 0.3).unwrap();
        let joint = Rect::new(0.5, 4.0, -0.2, 0.3).unwrap();
        let (wa, wb, wj) = (
            winding_number(&n1(), &a).unwrap(),
            winding_number(&n1(), &b).unwrap(),
            winding_number(&n1(), &joint).unwrap(),
        );
        // π/2 in a; π (triple) in b
        assert_eq!((wa, wb), (1, 3));
        assert_eq!(wa + wb, wj);
    }

    #[test]
    fn triple_zero_is_a_cluster() {
        let rect = Rect::new(2.9, 3.4, -0.05, 0.05).unwrap();
        let set = complex_eigs(&n1(), &rect).unwrap();
        assert_eq!(set.complex_zeros.len(), 1);
        assert_eq!(set.complex_zeros[0].multiplicity, 3);
        assert!((set.complex_zeros[0].k - Complex64::new(PI, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn finds_genuinely_complex_zeros() {
        // a weak interface with n(1) ≠ 1 pushes zeros off the real axis
        let p = RefractiveProfile::piecewise_constant(&[0.3], &[2.0, 2.6]).unwrap();
        let rect = Rect::new(0.5, 12.0, 0.05, 4.0).unwrap();
        let set = complex_eigs(&p, &rect).unwrap();
        let w = winding_number(&p, &rect).unwrap();
        assert_eq!(set.zero_count() as i64, w);
        for z in &set.complex_zeros {
            let d = d_of_k(&p, z.k).unwrap().d;
            assert!(d.norm() < 1e-9, "{z:?}");
            for image in [-z.k, z.k.conj(), -z.k.conj()] {
                assert!(d_of_k(&p, image).unwrap().d.norm() < 1e-9);
            }
        }
    }
}
