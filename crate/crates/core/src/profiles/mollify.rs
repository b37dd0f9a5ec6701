//! Smoothing of C^{1,1} functions by convolving the extended derivative with a
//! compactly supported bump kernel.

use std::fmt;
use std::sync::{Arc, OnceLock};

use super::{Regularity, RefractiveProfile};
use crate::error::{Error, Result};
use crate::quad;

/// Absolute tolerance of the convolution quadratures.
const CONV_TOL: f64 = 1e-12;

/// A function on `[0, 1]` with Lipschitz derivative.
pub trait C11Function: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Points in `(0, 1)` where the derivative has a kink; used to split quadratures.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closure-backed [`C11Function`].
#[derive(Clone)]
pub struct FnC11 {
    value: RealFn,
    derivative: RealFn,
    kinks: Vec<f64>,
}

impl FnC11 {
    pub fn new<F, D>(value: F, derivative: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            kinks: Vec::new(),
        }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }
}

impl C11Function for FnC11 {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

/// A profile whose derivative is continuous, seen as a [`C11Function`].
pub struct ProfileC11 {
    profile: RefractiveProfile,
}

impl ProfileC11 {
    pub fn new(profile: RefractiveProfile) -> Result<Self> {
        match profile.regularity() {
            Regularity::C11 | Regularity::C2 => Ok(Self { profile }),
            other => Err(Error::InvalidProfile(format!(
                "mollification needs a continuous derivative, profile is {other:?}"
            ))),
        }
    }
}

impl C11Function for ProfileC11 {
    fn value(&self, x: f64) -> f64 {
        self.profile.value(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.profile.eval_n(x, 1).unwrap_or(f64::NAN)
    }

    fn kinks(&self) -> Vec<f64> {
        self.profile.breakpoints()
    }
}

/// Unnormalized bump `exp(1/(x² − 1))` on `(-1, 1)`, zero outside.
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

fn bump_derivative(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let q = x * x - 1.0;
        bump(x) * (-2.0 * x / (q * q))
    } else {
        0.0
    }
}

/// `∫_{-1}^{1} bump`, computed once.
pub fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        quad::adaptive_simpson(bump, -1.0, 1.0, 1e-15).expect("bump integral is finite")
    })
}

/// The `j`-th mollified approximant `f_j` with `f_j' = g_j = f̃' ∗ η_{1/j}`.
pub struct Mollified {
    source: Arc<dyn C11Function>,
    index: u32,
    width: f64,
    cuts: Vec<f64>,
}

pub fn mollify(f: Arc<dyn C11Function>, j: u32) -> Result<Mollified> {
    if j == 0 {
        return Err(Error::Precondition("mollifier index must be >= 1".into()));
    }
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(f.kinks().into_iter().filter(|k| *k > 0.0 && *k < 1.0));
    Ok(Mollified {
        source: f,
        index: j,
        width: 1.0 / j as f64,
        cuts,
    })
}

impl Mollified {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn source(&self) -> &Arc<dyn C11Function> {
        &self.source
    }

    fn kernel(&self, z: f64) -> f64 {
        bump(z / self.width) / (self.width * bump_mass())
    }

    fn kernel_derivative(&self, z: f64) -> f64 {
        bump_derivative(z / self.width) / (self.width * self.width * bump_mass())
    }

    /// Derivative extended by constants outside `[0, 1]`.
    fn ext_derivative(&self, x: f64) -> f64 {
        self.source.derivative(x.clamp(0.0, 1.0))
    }

    /// `f` extended linearly outside `[0, 1]`; its derivative is `ext_derivative`.
    fn ext_value(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.source.value(0.0) + self.source.derivative(0.0) * x
        } else if x > 1.0 {
            self.source.value(1.0) + self.source.derivative(1.0) * (x - 1.0)
        } else {
            self.source.value(x)
        }
    }

    /// Convolution variable cut points `z = x − c` inside the kernel support.
    fn split_points(&self, x: f64) -> Vec<f64> {
        self.cuts.iter().map(|c| x - c).collect()
    }

    fn convolve<F: Fn(f64) -> f64>(&self, x: f64, integrand: F) -> f64 {
        let w = self.width;
        quad::simpson_split(integrand, -w, w, &self.split_points(x), CONV_TOL).unwrap_or(f64::NAN)
    }

    /// `f_j(x) = f(0) + ∫ η(z) [f̃(x − z) − f̃(−z)] dz`.
    pub fn value(&self, x: f64) -> f64 {
        let mut cuts = self.split_points(x);
        cuts.extend(self.cuts.iter().map(|c| -c));
        let w = self.width;
        let integral = quad::simpson_split(
            |z| self.kernel(z) * (self.ext_value(x - z) - self.ext_value(-z)),
            -w,
            w,
            &cuts,
            CONV_TOL,
        )
        .unwrap_or(f64::NAN);
        self.source.value(0.0) + integral
    }

    /// `g_j(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.convolve(x, |z| self.kernel(z) * self.ext_derivative(x - z))
    }

    /// `g_j'(x) = ∫ η'(z) f̃'(x − z) dz`.
    pub fn second_derivative(&self, x: f64) -> f64 {
        self.convolve(x, |z| self.kernel_derivative(z) * self.ext_derivative(x - z))
    }
}

impl fmt::Debug for Mollified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollified")
            .field("index", &self.index)
            .field("width", &self.width)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Arc<dyn C11Function> {
        Arc::new(FnC11::new(|x| x * x, |x| 2.0 * x))
    }

    /// `f' = 3|x − ½|`, so Lip(f') = 3.
    fn kinked() -> Arc<dyn C11Function> {
        Arc::new(
            FnC11::new(
                |x| 1.0 + 1.5 * (x - 0.5) * (x - 0.5).abs(),
                |x| 3.0 * (x - 0.5).abs(),
            )
            .with_kinks(vec![0.5]),
        )
    }

    #[test]
    fn kernel_has_unit_mass() {
        assert!((bump_mass() - 0.443_993_816_168_078_65).abs() < 1e-10);
        let m = mollify(square(), 5).unwrap();
        let mass = quad::adaptive_simpson(|z| m.kernel(z), -0.2, 0.2, 1e-14).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn odd_kernel_reproduces_linear_derivative() {
        let j = 8;
        let m = mollify(square(), j).unwrap();
        for i in 0..=20 {
            let x = 1.0 / j as f64 + (1.0 - 2.0 / j as f64) * i as f64 / 20.0;
            assert!((m.derivative(x) - 2.0 * x).abs() < 1e-11, "x = {x}");
        }
        // increments of f_j match f where g_j = f'
        assert!((m.value(0.75) - m.value(0.5) - (0.5625 - 0.25)).abs() < 1e-11);
    }

    #[test]
    fn constant_is_fixed() {
        let f: Arc<dyn C11Function> = Arc::new(FnC11::new(|_| 2.5, |_| 0.0));
        let m = mollify(f, 4).unwrap();
        for &x in &[0.0, 0.1, 0.5, 0.97, 1.0] {
            assert!((m.value(x) - 2.5).abs() < 1e-14);
            assert!(m.derivative(x).abs() < 1e-14);
        }
    }

    #[test]
    fn value_is_antiderivative_of_derivative() {
        let m = mollify(kinked(), 6).unwrap();
        let x = 0.73;
        let running = quad::simpson_split(|t| m.derivative(t), 0.0, x, &[0.5], 1e-11).unwrap();
        assert!((m.value(x) - (m.source().value(0.0) + running)).abs() < 1e-9);
        let h = 1e-5;
        let fd = (m.derivative(x + h) - m.derivative(x - h)) / (2.0 * h);
        assert!((m.second_derivative(x) - fd).abs() < 1e-6);
    }

    #[test]
    fn derivative_lipschitz_bound_survives() {
        let m = mollify(kinked(), 10).unwrap();
        let sup = (0..=400)
            .map(|i| m.second_derivative(i as f64 / 400.0).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 3.0 + 1e-9, "sup |g'| = {sup}");
    }

    #[test]
    fn profile_adapter_matches_closure() {
        use super::super::{Law, Segment};
        let p = RefractiveProfile::with_sampled_bounds(
            vec![
                Segment::new(0.0, 0.5, Law::Polynomial(vec![0.625, 1.5, -1.5])),
                Segment::new(0.5, 1.0, Law::Polynomial(vec![1.375, -1.5, 1.5])),
            ],
            Regularity::C11,
        )
        .unwrap();
        let a = mollify(Arc::new(ProfileC11::new(p).unwrap()), 8).unwrap();
        let b = mollify(kinked(), 8).unwrap();
        for &x in &[0.1, 0.45, 0.5, 0.8] {
            assert!((a.value(x) - b.value(x)).abs() < 1e-10);
        }
        let layered = RefractiveProfile::piecewise_constant(&[0.5], &[1.0, 2.0]).unwrap();
        assert!(ProfileC11::new(layered).is_err());
    }

    #[test]
    fn rejects_zero_index() {
        assert!(mollify(square(), 0).is_err());
    }
}
