//! Layered radial refractive-index profiles and their structural quantities:
//! optical thicknesses, interface jumps and the a-priori radius α.

mod file;
mod law;
mod mollify;
mod partition;

pub use file::{BoundsFile, LawFile, ProfileFile, SegmentFile};
pub use law::Law;
pub use mollify::{bump, bump_mass, mollify, C11Function, FnC11, Mollified, ProfileC11};
pub use partition::{m_sign_partition, SignPartition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Absolute tolerance of every √n quadrature.
pub const DELTA_TOL: f64 = 1e-12;

/// Tolerance for interface continuity checks of declared C² / C^{1,1} profiles.
const CONTINUITY_TOL: f64 = 1e-9;

/// Samples per segment used to validate positivity and declared bounds.
const VALIDATION_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    #[serde(alias = "PiecewiseC2")]
    PiecewiseC2,
    #[serde(alias = "C2")]
    C2,
    #[serde(alias = "C11")]
    C11,
    #[serde(alias = "PiecewiseConstant")]
    PiecewiseConstant,
}

/// Declared bounds `n_* ≤ n ≤ n^*`, with optional magnitude bounds on `n'` and `n''`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub n_star: f64,
    pub n_star_upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prime_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_second_max: Option<f64>,
}

impl Bounds {
    pub fn new(n_star: f64, n_star_upper: f64) -> Self {
        Self {
            n_star,
            n_star_upper,
            n_prime_max: None,
            n_second_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub law: Law,
}

impl Segment {
    pub fn new(start: f64, end: f64, law: Law) -> Self {
        Self { start, end, law }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Structural quantities of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetrics {
    pub delta_hats: Vec<f64>,
    pub delta_l: f64,
    pub epsilon0: f64,
    pub alpha: f64,
}

/// Piecewise-smooth radial index on `[0, 1]`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RefractiveProfile {
    segments: Vec<Segment>,
    regularity: Regularity,
    bounds: Bounds,
}

impl RefractiveProfile {
    pub fn new(segments: Vec<Segment>, regularity: Regularity, bounds: Bounds) -> Result<Self> {
        let p = Self {
            segments,
            regularity,
            bounds,
        };
        p.validate()?;
        Ok(p)
    }

    /// Single constant layer with tight bounds.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(
            vec![Segment::new(0.0, 1.0, Law::Constant(value))],
            Regularity::PiecewiseConstant,
            Bounds::new(value, value),
        )
    }

    /// Piecewise-constant profile from interior breakpoints and layer values.
    pub fn piecewise_constant(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidProfile(format!(
                "{} values need {} interior breakpoints, got {}",
                values.len(),
                values.len().saturating_sub(1),
                breaks.len()
            )));
        }
        let mut edges = vec![0.0];
        edges.extend_from_slice(breaks);
        edges.push(1.0);
        let segments = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Segment::new(edges[i], edges[i + 1], Law::Constant(v)))
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(segments, Regularity::PiecewiseConstant, Bounds::new(lo, hi))
    }

    /// Single smooth segment with bounds taken from a dense sample.
    pub fn smooth(law: Law, regularity: Regularity) -> Result<Self> {
        let (lo, hi) = sample_range(&law, 0.0, 1.0);
        Self::new(vec![Segment::new(0.0, 1.0, law)], regularity, Bounds::new(lo, hi))
    }

    /// Profile with bounds taken from a dense sample of its own segments.
    pub fn with_sampled_bounds(segments: Vec<Segment>, regularity: Regularity) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &segments {
            let (a, b) = sample_range(&s.law, s.start, s.end);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        Self::new(segments, regularity, Bounds::new(lo, hi))
    }

    fn validate(&self) -> Result<()> {
        let segs = &self.segments;
        if segs.is_empty() {
            return Err(Error::InvalidProfile("no segments".into()));
        }
        if segs[0].start != 0.0 || segs[segs.len() - 1].end != 1.0 {
            return Err(Error::InvalidProfile("segments must cover [0, 1]".into()));
        }
        for (i, s) in segs.iter().enumerate() {
            if !(s.start < s.end) {
                return Err(Error::InvalidProfile(format!(
                    "segment {i} has start {} >= end {}",
                    s.start, s.end
                )));
            }
            if i + 1 < segs.len() && s.end != segs[i + 1].start {
                let kind = if s.end > segs[i + 1].start { "overlap" } else { "gap" };
                return Err(Error::InvalidProfile(format!(
                    "{kind} between segments {i} and {}",
                    i + 1
                )));
            }
        }
        let b = &self.bounds;
        if !(b.n_star > 0.0) || !(b.n_star_upper >= b.n_star) {
            return Err(Error::InvalidProfile(format!(
                "bounds must satisfy 0 < n_star <= n_star_upper, got ({}, {})",
                b.n_star, b.n_star_upper
            )));
        }
        let slack = 1e-12 * b.n_star_upper.max(1.0);
        for (i, s) in segs.iter().enumerate() {
            for j in 0..=VALIDATION_SAMPLES {
                let r = s.start + s.len() * j as f64 / VALIDATION_SAMPLES as f64;
                let v = s.law.value(r);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidProfile(format!(
                        "segment {i} law is not positive at r = {r}"
                    )));
                }
                if v < b.n_star - slack || v > b.n_star_upper + slack {
                    return Err(Error::InvalidProfile(format!(
                        "n({r}) = {v} outside declared bounds [{}, {}]",
                        b.n_star, b.n_star_upper
                    )));
                }
            }
        }
        let orders: &[u8] = match self.regularity {
            Regularity::PiecewiseConstant => {
                if let Some(i) = segs.iter().position(|s| s.law.constant_value().is_none()) {
                    return Err(Error::InvalidProfile(format!(
                        "segment {i} is not constant in a piecewise-constant profile"
                    )));
                }
                &[]
            }
            Regularity::PiecewiseC2 => &[],
            Regularity::C11 => &[0, 1],
            Regularity::C2 => &[0, 1, 2],
        };
        for w in segs.windows(2) {
            let r = w[0].end;
            for &o in orders {
                let left = w[0].law.eval(r, o)?;
                let right = w[1].law.eval(r, o)?;
                if (left - right).abs() > CONTINUITY_TOL * (1.0 + left.abs()) {
                    return Err(Error::InvalidProfile(format!(
                        "derivative of order {o} jumps at r = {r} ({left} vs {right})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Number of layers `L`.
    pub fn layer_count(&self) -> usize {
        self.segments.len()
    }

    /// Interior breakpoints `R_1 < … < R_{L-1}`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments[..self.segments.len() - 1]
            .iter()
            .map(|s| s.end)
            .collect()
    }

    /// Index of the segment owning `r`; interior breakpoints belong to the right segment.
    pub fn segment_index(&self, r: f64) -> usize {
        self.segments
            .iter()
            .rposition(|s| r >= s.start)
            .unwrap_or(0)
    }

    pub fn eval_n(&self, r: f64, order: u8) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::RadiusOutOfRange(r));
        }
        self.segments[self.segment_index(r)].law.eval(r, order)
    }

    /// `n(r)` without the range check.
    pub fn value(&self, r: f64) -> f64 {
        self.segments[self.segment_index(r)].law.value(r)
    }

    /// `n_L(1)`.
    pub fn n_at_one(&self) -> f64 {
        self.segments[self.segments.len() - 1].law.value(1.0)
    }

    /// `n_1(0)`.
    pub fn n_at_zero(&self) -> f64 {
        self.segments[0].law.value(0.0)
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.segments.iter().all(|s| s.law.constant_value().is_some())
    }

    /// True when `n ≡ 1`, in which case `d(k)` vanishes identically.
    pub fn is_unit(&self) -> bool {
        self.segments.iter().all(|s| match s.law.constant_value() {
            Some(c) => c == 1.0,
            None => match &s.law {
                Law::Mollified(_) => (0..=64).all(|i| {
                    let r = s.start + s.len() * i as f64 / 64.0;
                    (s.law.value(r) - 1.0).abs() < 1e-14
                }),
                _ => false,
            },
        })
    }

    /// `∫_a^b √n(t) dt`, split at interior breakpoints.
    pub fn delta_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::Precondition(format!(
                "delta_integral needs 0 <= a <= b <= 1, got a = {a}, b = {b}"
            )));
        }
        let mut total = 0.0;
        for s in &self.segments {
            let lo = s.start.max(a);
            let hi = s.end.min(b);
            if hi > lo {
                total += segment_sqrt_integral(&s.law, lo, hi)?;
            }
        }
        Ok(total)
    }

    /// `δ̂_l` per layer.
    pub fn delta_hats(&self) -> Vec<f64> {
        self.segments
            .iter()
            .map(|s| segment_sqrt_integral(&s.law, s.start, s.end).unwrap_or(f64::NAN))
            .collect()
    }

    /// `δ_L = ∫_0^1 √n`.
    pub fn delta_l(&self) -> f64 {
        self.delta_hats().iter().sum()
    }

    /// Largest jump of `n` across interior breakpoints.
    pub fn epsilon0(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[1].law.value(w[1].start) - w[0].law.value(w[0].end)).abs())
            .fold(0.0, f64::max)
    }

    /// Radius α with `∫_α^1 √n = (δ_L − 1 + eps)/2`, or 1 when `δ_L < 1`.
    pub fn alpha_point(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
        }
        let delta = self.delta_l();
        if delta < 1.0 {
            return Ok(1.0);
        }
        let target = 0.5 * (delta - 1.0 + eps);
        if target > delta {
            return Err(Error::Domain(format!(
                "target mass {target} exceeds delta_L = {delta} (eps = {eps} too large)"
            )));
        }
        // tail(α) = ∫_α^1 √n is strictly decreasing in α
        let tail = |x: f64| self.delta_integral(x, 1.0);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if tail(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn metrics(&self, eps: f64) -> Result<ProfileMetrics> {
        let delta_hats = self.delta_hats();
        Ok(ProfileMetrics {
            delta_l: delta_hats.iter().sum(),
            delta_hats,
            epsilon0: self.epsilon0(),
            alpha: self.alpha_point(eps)?,
        })
    }

    /// Equivalent profile with adjacent identical laws merged.
    pub fn canonical(&self) -> Self {
        let mut merged: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in &self.segments {
            match merged.last_mut() {
                Some(last) if last.law == s.law => last.end = s.end,
                _ => merged.push(s.clone()),
            }
        }
        Self {
            segments: merged,
            regularity: self.regularity,
            bounds: self.bounds,
        }
    }

    /// Same profile with a different regularity declaration (validated).
    pub fn with_regularity(&self, regularity: Regularity) -> Result<Self> {
        Self::new(self.segments.clone(), regularity, self.bounds)
    }

    pub fn with_bounds(&self, bounds: Bounds) -> Result<Self> {
        Self::new(self.segments.clone(), self.regularity, bounds)
    }
}

pub(crate) fn segment_sqrt_integral(law: &Law, a: f64, b: f64) -> Result<f64> {
    if let Some(c) = law.constant_value() {
        return Ok(c.sqrt() * (b - a));
    }
    if let Law::Affine { a: c0, b: c1 } = law {
        // exact antiderivative (2/3)(c0 + c1 r)^{3/2} / c1
        let f = |r: f64| (c0 + c1 * r).powf(1.5) * 2.0 / (3.0 * c1);
        return Ok(f(b) - f(a));
    }
    quad::adaptive_simpson(|r| law.value(r).sqrt(), a, b, DELTA_TOL)
}

fn sample_range(law: &Law, a: f64, b: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..=4 * VALIDATION_SAMPLES {
        let v = law.value(a + (b - a) * j as f64 / (4 * VALIDATION_SAMPLES) as f64);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n1() -> RefractiveProfile {
        RefractiveProfile::piecewise_constant(&[0.5], &[4.0, 16.0]).unwrap()
    }

    #[test]
    fn eval_matches_layer_values() {
        let p = n1();
        assert_eq!(p.eval_n(0.25, 0).unwrap(), 4.0);
        assert_eq!(p.eval_n(0.75, 0).unwrap(), 16.0);
        // right limit at the interface
        assert_eq!(p.eval_n(0.5, 0).unwrap(), 16.0);
        assert_eq!(p.eval_n(1.0, 0).unwrap(), 16.0);
        assert_eq!(RefractiveProfile::constant(1.0).unwrap().eval_n(0.7, 0).unwrap(), 1.0);
        let aff = RefractiveProfile::smooth(Law::Affine { a: 2.0, b: 1.0 }, Regularity::C2).unwrap();
        assert_eq!(aff.eval_n(0.5, 1).unwrap(), 1.0);
    }

    #[test]
    fn eval_rejects_out_of_range() {
        assert!(matches!(n1().eval_n(1.2, 0), Err(Error::RadiusOutOfRange(_))));
        assert!(matches!(n1().eval_n(-0.1, 0), Err(Error::RadiusOutOfRange(_))));
        assert!(matches!(n1().eval_n(0.3, 3), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn delta_values() {
        assert!((n1().delta_integral(0.0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(RefractiveProfile::constant(1.0).unwrap().delta_l(), 1.0);
        let aff = RefractiveProfile::smooth(Law::Affine { a: 2.0, b: 1.0 }, Regularity::C2).unwrap();
        let exact = 2.0 / 3.0 * (3f64.powf(1.5) - 2f64.powf(1.5));
        assert!((aff.delta_l() - exact).abs() < 1e-13);
        let poly =
            RefractiveProfile::smooth(Law::Polynomial(vec![2.0, 1.0]), Regularity::C2).unwrap();
        assert!((poly.delta_l() - exact).abs() < 1e-12);
        assert!(n1().delta_integral(0.6, 0.5).is_err());
    }

    #[test]
    fn epsilon0_values() {
        assert_eq!(n1().epsilon0(), 12.0);
        assert_eq!(RefractiveProfile::constant(2.0).unwrap().epsilon0(), 0.0);
        let three = RefractiveProfile::piecewise_constant(&[0.3, 0.6], &[1.0, 1.1, 1.05]).unwrap();
        assert!((three.epsilon0() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn alpha_values() {
        assert!((n1().alpha_point(0.5).unwrap() - 0.6875).abs() < 1e-12);
        assert_eq!(RefractiveProfile::constant(0.25).unwrap().alpha_point(0.3).unwrap(), 1.0);
        let unit = RefractiveProfile::constant(1.0).unwrap();
        assert!((unit.alpha_point(0.2).unwrap() - 0.9).abs() < 1e-12);
        assert!(matches!(n1().alpha_point(5.0), Err(Error::Domain(_))));
        assert!(n1().alpha_point(0.0).is_err());
    }

    #[test]
    fn alpha_bisection_oracle_on_affine() {
        // ∫_α^1 √(2+r) dr = (2/3)(3^{3/2} − (2+α)^{3/2}); solve in closed form
        let p = RefractiveProfile::smooth(Law::Affine { a: 2.0, b: 1.0 }, Regularity::C2).unwrap();
        let eps = 0.4;
        let target = 0.5 * (p.delta_l() - 1.0 + eps);
        let exact = (3f64.powf(1.5) - 1.5 * target).powf(2.0 / 3.0) - 2.0;
        assert!((p.alpha_point(eps).unwrap() - exact).abs() < 1e-11);
    }

    #[test]
    fn validation_rejects_bad_profiles() {
        let gap = RefractiveProfile::new(
            vec![
                Segment::new(0.0, 0.4, Law::Constant(2.0)),
                Segment::new(0.5, 1.0, Law::Constant(2.0)),
            ],
            Regularity::PiecewiseConstant,
            Bounds::new(1.0, 3.0),
        );
        assert!(matches!(gap, Err(Error::InvalidProfile(m)) if m.contains("gap")));
        let overlap = RefractiveProfile::new(
            vec![
                Segment::new(0.0, 0.6, Law::Constant(2.0)),
                Segment::new(0.5, 1.0, Law::Constant(2.0)),
            ],
            Regularity::PiecewiseConstant,
            Bounds::new(1.0, 3.0),
        );
        assert!(matches!(overlap, Err(Error::InvalidProfile(m)) if m.contains("overlap")));
        let negative = RefractiveProfile::smooth(Law::Affine { a: 0.5, b: -1.0 }, Regularity::C2);
        assert!(negative.is_err());
        let dishonest = RefractiveProfile::new(
            vec![Segment::new(0.0, 1.0, Law::Constant(5.0))],
            Regularity::C2,
            Bounds::new(1.0, 3.0),
        );
        assert!(dishonest.is_err());
        let not_c2 = RefractiveProfile::new(
            vec![
                Segment::new(0.0, 0.5, Law::Constant(2.0)),
                Segment::new(0.5, 1.0, Law::Constant(3.0)),
            ],
            Regularity::C2,
            Bounds::new(1.0, 3.0),
        );
        assert!(not_c2.is_err());
    }

    #[test]
    fn canonical_merges_identical_neighbours() {
        let p = RefractiveProfile::piecewise_constant(&[0.3, 0.6], &[2.0, 2.0, 3.0]).unwrap();
        let c = p.canonical();
        assert_eq!(c.layer_count(), 2);
        assert_eq!(c.breakpoints(), vec![0.6]);
    }
}
