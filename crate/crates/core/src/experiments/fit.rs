use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, SimplexOptions};
use crate::charfn::d_of_k;
use crate::error::{Error, Result};
use crate::profiles::{Law, Regularity, RefractiveProfile, Segment};
use crate::spectrum::real_eigs;

/// Objective assigned to parameters that do not describe a valid profile.
const INVALID_OBJECTIVE: f64 = 1e300;
const OBJECTIVE_TOL: f64 = 1e-14;
/// Relative simplex size below which a start counts as converged.
const PARAMETER_TOL: f64 = 1e-9;
const ITERATIONS_PER_DIM: usize = 200;
const DEDUP_DISTANCE: f64 = 1e-4;
const TWIN_RESIDUAL: f64 = 1e-10;
const TWIN_SEPARATION: f64 = 1e-3;
/// Gauss–Newton steps applied after the simplex.
const POLISH_STEPS: usize = 30;
const POLISH_HALVINGS: usize = 30;
/// Relative distance within which a predicted zero matches a datum; triple zeros are
/// only located to about the cube root of rounding.
const SPECTRUM_MATCH_TOL: f64 = 1e-3;
/// Minima whose profile is within this of `n ≡ 1` are the trivial solution `d ≡ 0`.
const UNIT_TOL: f64 = 1e-3;

/// Parameterized families searched by [`fit_profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// Unknown inner constant on `[0, r1)`, known outer constant on `[r1, α)`.
    TwoLayerInner { outer: f64, r1: f64 },
    /// Unknown constants between known interior breakpoints.
    LConstants { breakpoints: Vec<f64> },
    /// Unknown coefficients of one polynomial, ascending in `r`.
    SinglePolynomial { degree: usize },
}

impl FitModel {
    pub fn dimension(&self) -> usize {
        match self {
            FitModel::TwoLayerInner { .. } => 1,
            FitModel::LConstants { breakpoints } => breakpoints.len() + 1,
            FitModel::SinglePolynomial { degree } => degree + 1,
        }
    }
}

/// Known profile on `[alpha, 1]`; the model then lives on `[0, alpha]`.
#[derive(Debug, Clone)]
pub struct Tail {
    pub alpha: f64,
    pub law: Law,
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub eigenvalues: Vec<f64>,
    pub model: FitModel,
    pub tail: Option<Tail>,
    pub initial_guesses: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub params: Vec<f64>,
    pub residual: f64,
    /// Real zeros the fitted profile predicts up to the largest datum that match no datum.
    /// Computed only for exact fits (residual below the twin threshold).
    pub unmatched_zeros: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub start: Vec<f64>,
    pub params: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted Gauss–Newton steps after the simplex.
    pub polish_steps: usize,
    /// Descent ended at `n ≡ 1`, which annihilates `d` for every `k`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_params: Vec<f64>,
    /// `Σ_j |d_θ(k_j)|²` at `best_params`.
    pub residual: f64,
    /// Distinct minima, ascending by residual; degenerate ones excluded.
    pub minima: Vec<LocalMinimum>,
    pub non_uniqueness_flag: bool,
    pub starts: Vec<StartReport>,
}

impl FitProblem {
    fn validate(&self) -> Result<()> {
        if self.eigenvalues.is_empty() {
            return Err(Error::Precondition("no eigenvalues supplied".into()));
        }
        if self.eigenvalues.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::Precondition("eigenvalues must be positive and finite".into()));
        }
        let dim = self.model.dimension();
        if dim > self.eigenvalues.len() {
            return Err(Error::Precondition(format!(
                "{dim} parameters but only {} eigenvalues",
                self.eigenvalues.len()
            )));
        }
        if self.initial_guesses.is_empty() {
            return Err(Error::Precondition("no initial guesses".into()));
        }
        if let Some(g) = self.initial_guesses.iter().find(|g| g.len() != dim) {
            return Err(Error::Precondition(format!(
                "initial guess has {} entries, model needs {dim}",
                g.len()
            )));
        }
        let end = self.model_end();
        if !(end > 0.0 && end <= 1.0) {
            return Err(Error::Precondition(format!("tail must start inside (0, 1], got {end}")));
        }
        let inner = match &self.model {
            FitModel::TwoLayerInner { r1, .. } => vec![*r1],
            FitModel::LConstants { breakpoints } => breakpoints.clone(),
            FitModel::SinglePolynomial { .. } => Vec::new(),
        };
        let mut last = 0.0;
        for &b in &inner {
            if !(b > last && b < end) {
                return Err(Error::Precondition(format!(
                    "breakpoints must increase strictly inside (0, {end})"
                )));
            }
            last = b;
        }
        Ok(())
    }

    fn model_end(&self) -> f64 {
        self.tail.as_ref().map_or(1.0, |t| t.alpha)
    }

    /// Two end points belong to one minimum when they are close, or when both are exact fits
    /// joined through an exact fit at their midpoint (a degenerate valley).
    fn same_basin(&self, m: &LocalMinimum, params: &[f64], residual: f64) -> bool {
        let gap = distance(&m.params, params);
        if gap <= DEDUP_DISTANCE {
            return true;
        }
        if m.residual >= TWIN_RESIDUAL || residual >= TWIN_RESIDUAL {
            return false;
        }
        let mid: Vec<f64> = m.params.iter().zip(params).map(|(a, b)| 0.5 * (a + b)).collect();
        self.objective(&mid) < TWIN_RESIDUAL
    }

    fn unmatched_zeros(&self, params: &[f64]) -> Option<usize> {
        let profile = self.profile(params).ok()?;
        let k_max = self.eigenvalues.iter().copied().fold(0.0, f64::max);
        let predicted = real_eigs(&profile, k_max + SPECTRUM_MATCH_TOL).ok()?.real_zeros;
        Some(
            predicted
                .iter()
                .filter(|z| {
                    self.eigenvalues
                        .iter()
                        .all(|k| (*z - k).abs() > SPECTRUM_MATCH_TOL * k.max(1.0))
                })
                .count(),
        )
    }

    /// Profile for parameters `theta`, tail appended unchanged.
    pub fn profile(&self, theta: &[f64]) -> Result<RefractiveProfile> {
        let end = self.model_end();
        let (mut segments, mut regularity) = match &self.model {
            FitModel::TwoLayerInner { outer, r1 } => (
                vec![
                    Segment::new(0.0, *r1, Law::Constant(theta[0])),
                    Segment::new(*r1, end, Law::Constant(*outer)),
                ],
                Regularity::PiecewiseConstant,
            ),
            FitModel::LConstants { breakpoints } => {
                let mut edges = vec![0.0];
                edges.extend_from_slice(breakpoints);
                edges.push(end);
                (
                    theta
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| Segment::new(edges[i], edges[i + 1], Law::Constant(v)))
                        .collect(),
                    Regularity::PiecewiseConstant,
                )
            }
            FitModel::SinglePolynomial { .. } => (
                vec![Segment::new(0.0, end, Law::Polynomial(theta.to_vec()))],
                Regularity::C2,
            ),
        };
        if let Some(t) = &self.tail {
            if t.alpha < 1.0 {
                segments.push(Segment::new(t.alpha, 1.0, t.law.clone()));
                let tail_constant = t.law.constant_value().is_some();
                if !(regularity == Regularity::PiecewiseConstant && tail_constant) {
                    regularity = Regularity::PiecewiseC2;
                }
            }
        }
        RefractiveProfile::with_sampled_bounds(segments, regularity)
    }

    /// `(Re d, Im d)` at every eigenvalue; `None` for invalid parameters.
    fn residuals(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let profile = self.profile(theta).ok()?;
        let mut out = Vec::with_capacity(2 * self.eigenvalues.len());
        for &k in &self.eigenvalues {
            let d = d_of_k(&profile, Complex64::new(k, 0.0)).ok()?.d;
            if !d.norm().is_finite() {
                return None;
            }
            out.extend([d.re, d.im]);
        }
        Some(out)
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        self.residuals(theta)
            .map_or(INVALID_OBJECTIVE, |r| r.iter().map(|v| v * v).sum())
    }

    /// Gauss–Newton on the residual vector with a central-difference Jacobian and an SVD
    /// least-squares step, halved until the objective drops. Handles minima where the
    /// Jacobian loses rank, which a damped step would crawl along.
    fn polish(&self, mut x: Vec<f64>, mut f: f64) -> (Vec<f64>, f64, usize) {
        let dim = x.len();
        let mut accepted = 0;
        for _ in 0..POLISH_STEPS {
            if f == 0.0 {
                break;
            }
            let Some(r) = self.residuals(&x) else { break };
            let mut jac = DMatrix::<f64>::zeros(r.len(), dim);
            for i in 0..dim {
                let h = 1e-7 * x[i].abs().max(1.0);
                let (mut up, mut down) = (x.clone(), x.clone());
                up[i] += h;
                down[i] -= h;
                let (Some(ru), Some(rd)) = (self.residuals(&up), self.residuals(&down)) else {
                    return (x, f, accepted);
                };
                for (row, (a, b)) in ru.iter().zip(&rd).enumerate() {
                    jac[(row, i)] = (a - b) / (2.0 * h);
                }
            }
            let svd = jac.svd(true, true);
            let cutoff = 1e-13 * svd.singular_values.max();
            let Ok(step) = svd.solve(&DVector::from_vec(r), cutoff) else { break };
            let mut scale = 1.0;
            let mut improved = false;
            for _ in 0..POLISH_HALVINGS {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - scale * b).collect();
                let ft = self.objective(&trial);
                if ft < f {
                    x = trial;
                    f = ft;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if !improved {
                break;
            }
            accepted += 1;
        }
        (x, f, accepted)
    }
}

/// Multi-start simplex descent on `θ ↦ Σ_j |d_θ(k_j)|²`.
pub fn fit_profile(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let dim = problem.model.dimension();
    let opts = SimplexOptions {
        f_tol: OBJECTIVE_TOL,
        x_tol: PARAMETER_TOL,
        max_iter: ITERATIONS_PER_DIM * dim,
        initial_step: 0.1,
    };
    let starts: Vec<StartReport> = problem
        .initial_guesses
        .par_iter()
        .map(|guess| {
            let out = nelder_mead(|t| problem.objective(t), guess, opts);
            let (params, residual, polish_steps) = problem.polish(out.x, out.f);
            let degenerate = problem.profile(&params).is_ok_and(|p| is_near_unit(&p));
            StartReport {
                start: guess.clone(),
                params,
                residual,
                iterations: out.iterations,
                converged: out.converged,
                polish_steps,
                degenerate,
            }
        })
        .collect();

    let mut candidates: Vec<&StartReport> = starts
        .iter()
        .filter(|s| !s.degenerate && s.residual < INVALID_OBJECTIVE)
        .collect();
    candidates.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let mut minima: Vec<LocalMinimum> = Vec::new();
    for c in candidates {
        if minima.iter().all(|m| !problem.same_basin(m, &c.params, c.residual)) {
            minima.push(LocalMinimum {
                params: c.params.clone(),
                residual: c.residual,
                unmatched_zeros: None,
            });
        }
    }
    if minima.is_empty() {
        return Err(Error::Precondition(
            "every start ended at an invalid or degenerate profile".into(),
        ));
    }
    for m in minima.iter_mut().filter(|m| m.residual < TWIN_RESIDUAL) {
        m.unmatched_zeros = problem.unmatched_zeros(&m.params);
    }
    // among exact fits prefer the one whose spectrum holds nothing the data lack
    let best = minima
        .iter()
        .filter(|m| m.unmatched_zeros.is_some())
        .min_by(|a, b| (a.unmatched_zeros, a.residual).partial_cmp(&(b.unmatched_zeros, b.residual)).unwrap())
        .unwrap_or(&minima[0])
        .clone();
    let twins: Vec<&LocalMinimum> = minima.iter().filter(|m| m.residual < TWIN_RESIDUAL).collect();
    let non_uniqueness_flag = twins
        .iter()
        .enumerate()
        .any(|(i, a)| twins[i + 1..].iter().any(|b| distance(&a.params, &b.params) > TWIN_SEPARATION));
    Ok(FitResult {
        best_params: best.params,
        residual: best.residual,
        minima,
        non_uniqueness_flag,
        starts,
    })
}

fn is_near_unit(profile: &RefractiveProfile) -> bool {
    (0..=64).all(|i| (profile.value(i as f64 / 64.0) - 1.0).abs() < UNIT_TOL)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn half_pi_multiples(count: usize) -> Vec<f64> {
        (1..=count).map(|m| m as f64 * PI / 2.0).collect()
    }

    #[test]
    fn recovers_inner_constant() {
        let problem = FitProblem {
            eigenvalues: half_pi_multiples(20),
            model: FitModel::TwoLayerInner { outer: 16.0, r1: 0.5 },
            tail: None,
            initial_guesses: (0..8).map(|i| vec![1.0 + 24.0 * i as f64 / 7.0]).collect(),
        };
        let fit = fit_profile(&problem).unwrap();
        assert!((fit.best_params[0] - 4.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.residual <= 1e-12);
        // inner 36 also vanishes at every datum but predicts zeros in between
        let wide = fit.minima.iter().find(|m| (m.params[0] - 36.0).abs() < 1e-6).unwrap();
        assert!(wide.unmatched_zeros.unwrap() > 0);
    }

    #[test]
    fn twin_minima_for_the_jump_pair() {
        let problem = FitProblem {
            eigenvalues: half_pi_multiples(20),
            model: FitModel::LConstants { breakpoints: vec![0.5] },
            tail: None,
            initial_guesses: vec![vec![3.0, 14.0], vec![14.0, 3.0], vec![5.0, 17.0], vec![17.0, 5.0]],
        };
        let fit = fit_profile(&problem).unwrap();
        assert!(fit.non_uniqueness_flag, "{fit:?}");
        for target in [[4.0, 16.0], [16.0, 4.0]] {
            let m = fit
                .minima
                .iter()
                .find(|m| distance(&m.params, &target) < 1e-3)
                .unwrap_or_else(|| panic!("no minimum near {target:?}: {fit:?}"));
            assert!(m.residual <= 1e-12);
        }
        assert!(fit.minima.windows(2).all(|w| w[0].residual <= w[1].residual));
        // (4,16) is a regular minimum; along one direction at (16,4) the residual is cubic
        let sharp = fit.minima.iter().find(|m| distance(&m.params, &[4.0, 16.0]) < 1e-3).unwrap();
        assert!(distance(&sharp.params, &[4.0, 16.0]) < 1e-8);
        let near_16_4 = fit.minima.iter().filter(|m| distance(&m.params, &[16.0, 4.0]) < 1e-2).count();
        assert_eq!(near_16_4, 1, "{fit:?}");
        // constant 9 gives d = (16/27) d₁, a third exact fit
        assert!(fit.minima.iter().any(|m| distance(&m.params, &[9.0, 9.0]) < 1e-6));
        assert!(fit.minima.iter().all(|m| m.residual >= TWIN_RESIDUAL || m.unmatched_zeros == Some(0)));
    }

    #[test]
    fn truth_has_tiny_residual_with_tail() {
        let problem = FitProblem {
            eigenvalues: half_pi_multiples(6),
            model: FitModel::LConstants { breakpoints: vec![0.25] },
            tail: Some(Tail {
                alpha: 0.5,
                law: Law::Constant(16.0),
            }),
            initial_guesses: vec![vec![4.0, 4.0]],
        };
        assert!(problem.objective(&[4.0, 4.0]) <= 1e-12);
        let p = problem.profile(&[4.0, 4.0]).unwrap();
        assert_eq!(p.value(0.75), 16.0);
        assert_eq!(p.value(0.3), 4.0);
    }

    #[test]
    fn invalid_parameters_are_penalized() {
        let problem = FitProblem {
            eigenvalues: vec![1.0],
            model: FitModel::TwoLayerInner { outer: 2.0, r1: 0.5 },
            tail: None,
            initial_guesses: vec![vec![1.0]],
        };
        assert_eq!(problem.objective(&[-1.0]), INVALID_OBJECTIVE);
    }

    #[test]
    fn preconditions() {
        let mut problem = FitProblem {
            eigenvalues: vec![],
            model: FitModel::SinglePolynomial { degree: 1 },
            tail: None,
            initial_guesses: vec![vec![1.0, 1.0]],
        };
        assert!(matches!(fit_profile(&problem), Err(Error::Precondition(_))));
        problem.eigenvalues = vec![1.0];
        assert!(fit_profile(&problem).is_err());
        problem.eigenvalues = vec![1.0, 2.0];
        problem.initial_guesses = vec![vec![1.0]];
        assert!(fit_profile(&problem).is_err());
    }

    #[test]
    fn deterministic_for_fixed_guesses() {
        let problem = FitProblem {
            eigenvalues: half_pi_multiples(8),
            model: FitModel::SinglePolynomial { degree: 1 },
            tail: None,
            initial_guesses: vec![vec![3.0, 1.0], vec![6.0, -1.0]],
        };
        assert_eq!(fit_profile(&problem).unwrap(), fit_profile(&problem).unwrap());
    }
}
