use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Value};

use tev_core::analysis::{
    build_contour, classify_case_with, kronecker_search, verify_contour_lower_bound, ContourCase, ContourParams,
    KroneckerStrategy, CONTOUR_HEADER,
};
use tev_core::charfn::{d_of_k, dominant_coeffs, sweep, SWEEP_HEADER};
use tev_core::experiments::{fit_profile, verify_counterexample, FitModel, FitProblem, Tail};
use tev_core::profiles::{mollify, C11Function, Law, ProfileC11};
use tev_core::spectrum::{
    complex_eigs_with, density_fit_with, real_eigs_with, ComplexSearch, DensityOptions, EigenvalueSet, RealScan, Rect,
    COUNTING_HEADER, EIGENVALUE_HEADER,
};

use crate::args::{CaseArg, Command, Format, ModelArg, StrategyArg};
use crate::input::{load_eigenvalues, load_profile, parse_vector, parse_wavenumbers};
use crate::output::{real, Artifact, Cell, Table};
use crate::CliError;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize to JSON")
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn eigenvalue_table(set: &EigenvalueSet) -> Table {
    let mut table = Table::new(EIGENVALUE_HEADER);
    for (i, z) in set.rows() {
        table.rows.push(vec![
            Cell::Int(i as i64),
            Cell::Real(z.k.re),
            Cell::Real(z.k.im),
            Cell::Int(z.multiplicity as i64),
            Cell::Real(z.residual),
        ]);
    }
    table
}

/// Runs one subcommand and returns its artifact together with the requested format and path.
pub fn dispatch(command: Command) -> Result<(Artifact, crate::args::OutputArgs), CliError> {
    match command {
        Command::Eval { profile, k, out } => {
            let p = load_profile(&profile.profile)?;
            let ks = parse_wavenumbers(&k)?;
            let mut table = Table::new("k_re,k_im,d_re,d_im");
            for k in ks {
                let d = d_of_k(&p, k)?.d;
                table.rows.push(vec![Cell::Real(k.re), Cell::Real(k.im), Cell::Real(d.re), Cell::Real(d.im)]);
            }
            let mut a = Artifact::new("eval", Format::Csv).config("profile", profile.profile.display());
            a.table = Some(table);
            Ok((a, out))
        }
        Command::Sweep { profile, k_min, k_max, points, im, out } => {
            let p = load_profile(&profile.profile)?;
            if points < 2 || !(k_max > k_min) {
                return Err(CliError::Usage("sweep needs --points ≥ 2 and --k-max > --k-min".into()));
            }
            let ks: Vec<Complex64> = (0..points)
                .map(|i| Complex64::new(k_min + (k_max - k_min) * i as f64 / (points - 1) as f64, im))
                .collect();
            let rows = sweep(&p, &ks)?;
            let mut a = Artifact::new("sweep", Format::Csv)
                .config("profile", profile.profile.display())
                .config("k_min", real(k_min))
                .config("k_max", real(k_max))
                .config("points", points)
                .config("im", real(im));
            a.table = Some(Table::reals(SWEEP_HEADER, rows.iter().map(|r| r.fields().to_vec())));
            Ok((a, out))
        }
        Command::Eigs { profile, k_max, step_fraction, detect_even, out } => {
            let p = load_profile(&profile.profile)?;
            let scan = RealScan {
                step_fraction: positive("step-fraction", step_fraction)?,
                detect_even,
                ..RealScan::default()
            };
            let set = real_eigs_with(&p, positive("k-max", k_max)?, scan)?;
            let mut a = Artifact::new("eigs", Format::Csv)
                .config("profile", profile.profile.display())
                .config("k_max", real(k_max))
                .config("step_fraction", real(step_fraction))
                .config("detect_even", detect_even);
            a.summary = Some(json!({ "zeros": set.real_zeros.len(), "warnings": set.warnings }));
            a.table = Some(eigenvalue_table(&set));
            Ok((a, out))
        }
        Command::Ceigs { profile, rect, min_cell, max_refine, out } => {
            let p = load_profile(&profile.profile)?;
            let [re_min, re_max, im_min, im_max] = rect[..] else {
                return Err(CliError::Usage("--rect takes four numbers: re_min,re_max,im_min,im_max".into()));
            };
            let region = Rect::new(re_min, re_max, im_min, im_max)?;
            let search = ComplexSearch {
                min_cell: positive("min-cell", min_cell)?,
                max_refine,
                ..ComplexSearch::default()
            };
            let set = complex_eigs_with(&p, &region, search)?;
            let mut a = Artifact::new("ceigs", Format::Csv)
                .config("profile", profile.profile.display())
                .config("rect", rect.iter().map(|v| real(*v)).collect::<Vec<_>>().join(";"))
                .config("min_cell", real(min_cell))
                .config("max_refine", max_refine);
            a.summary = Some(json!({ "zero_count": set.zero_count(), "warnings": set.warnings }));
            a.table = Some(eigenvalue_table(&set));
            Ok((a, out))
        }
        Command::Density { profile, t_max, thresholds, min_zeros, out } => {
            let p = load_profile(&profile.profile)?;
            let opts = DensityOptions {
                thresholds,
                min_zeros,
                ..DensityOptions::default()
            };
            let fit = density_fit_with(&p, positive("t-max", t_max)?, opts)?;
            let mut table = Table::new(COUNTING_HEADER);
            for (t, n) in fit.rows() {
                table.rows.push(vec![Cell::Real(t), Cell::Int(n as i64)]);
            }
            let mut a = Artifact::new("density", Format::Csv)
                .config("profile", profile.profile.display())
                .config("t_max", real(t_max))
                .config("thresholds", thresholds)
                .config("min_zeros", min_zeros);
            a.summary = Some(json!({
                "slope": fit.slope,
                "intercept": fit.intercept,
                "delta_estimate": fit.delta_estimate,
                "strip_height": fit.strip_height,
                "caveat": fit.caveat,
            }));
            a.table = Some(table);
            Ok((a, out))
        }
        Command::Dominant { profile, k_max, points, out } => {
            let p = load_profile(&profile.profile)?;
            if points < 1 {
                return Err(CliError::Usage("--points must be at least 1".into()));
            }
            let k_max = positive("k-max", k_max)?;
            let model = dominant_coeffs(&p)?;
            let ks: Vec<Complex64> = (1..=points).map(|i| Complex64::new(k_max * i as f64 / points as f64, 0.0)).collect();
            let rows = sweep(&p, &ks)?;
            let gap = rows.iter().map(|r| (r.d - r.dominant).norm()).fold(0.0, f64::max);
            let mut a = Artifact::new("dominant", Format::Csv)
                .config("profile", profile.profile.display())
                .config("k_max", real(k_max))
                .config("points", points);
            a.summary = Some(json!({ "model": to_value(&model), "max_abs_difference": gap }));
            a.table = Some(Table::reals(SWEEP_HEADER, rows.iter().map(|r| r.fields().to_vec())));
            Ok((a, out))
        }
        Command::Check { profile, eps, max_denominator, ratio_tol, out } => {
            let p = load_profile(&profile.profile)?;
            let report = classify_case_with(&p, positive("eps", eps)?, max_denominator, positive("ratio-tol", ratio_tol)?)?;
            let mut a = Artifact::new("check", Format::Text)
                .config("profile", profile.profile.display())
                .config("eps", real(eps))
                .config("max_denominator", max_denominator)
                .config("ratio_tol", real(ratio_tol));
            a.summary = Some(to_value(&report));
            Ok((a, out))
        }
        Command::Kronecker { v, a: shifts, eps1, t_min, t_cap, strategy, out } => {
            let strategy = match strategy {
                StrategyArg::Grid => KroneckerStrategy::Grid,
                StrategyArg::Windows => KroneckerStrategy::Windows,
            };
            let hit = kronecker_search(&v, &shifts, eps1, t_min, t_cap, strategy)?.hit()?;
            let join = |xs: &[f64]| xs.iter().map(|x| real(*x)).collect::<Vec<_>>().join(";");
            let mut a = Artifact::new("kronecker", Format::Text)
                .config("v", join(&v))
                .config("a", join(&shifts))
                .config("eps1", real(eps1))
                .config("t_min", real(t_min))
                .config("t_cap", real(t_cap))
                .config("strategy", format!("{strategy:?}").to_lowercase());
            a.summary = Some(to_value(&hit));
            Ok((a, out))
        }
        Command::Contour { profile, case, c1, t_floor, t_cap, samples, out } => {
            let p = load_profile(&profile.profile)?;
            let params = ContourParams {
                case: match case {
                    CaseArg::Case1 => ContourCase::Case1,
                    CaseArg::Case2a => ContourCase::Case2a,
                    CaseArg::Case2b => ContourCase::Case2b,
                },
                c1,
                t_floor,
                t_cap,
                samples,
                ..ContourParams::default()
            };
            let spec = build_contour(&p, &params)?;
            let check = verify_contour_lower_bound(&p, &spec)?;
            let mut geometry = to_value(&spec);
            if let Some(obj) = geometry.as_object_mut() {
                obj.remove("samples");
            }
            let mut a = Artifact::new("contour", Format::Csv)
                .config("profile", profile.profile.display())
                .config("case", format!("{:?}", params.case).to_lowercase())
                .config("c1", c1.map_or("fitted".to_string(), real))
                .config("t_floor", real(t_floor))
                .config("t_cap", real(t_cap))
                .config("samples", samples);
            a.summary = Some(json!({
                "contour": geometry,
                "min_normalized": check.min_normalized,
                "at": to_value(&check.at),
                "fraction_of_bound": check.fraction_of_bound,
            }));
            a.table = Some(Table::reals(CONTOUR_HEADER, check.samples.iter().map(|s| s.fields().to_vec())));
            Ok((a, out))
        }
        Command::Counterexample { kmax, kmin, points, out } => {
            if points < 1 || !(kmax > kmin) || !(kmin >= 0.0) {
                return Err(CliError::Usage("need --points ≥ 1 and --kmax > --kmin ≥ 0".into()));
            }
            let grid: Vec<f64> = (1..=points).map(|i| kmin + (kmax - kmin) * i as f64 / points as f64).collect();
            let report = verify_counterexample(&grid)?;
            let mut a = Artifact::new("counterexample", Format::Text)
                .config("kmin", real(kmin))
                .config("kmax", real(kmax))
                .config("points", points);
            a.summary = Some(to_value(&report));
            Ok((a, out))
        }
        Command::Invert {
            eigenvalues,
            model,
            outer,
            r1,
            breakpoints,
            degree,
            guesses,
            tail_alpha,
            tail_coefficients,
            take,
            out,
        } => {
            let mut data = load_eigenvalues(&eigenvalues)?;
            if let Some(n) = take {
                data.truncate(n);
            }
            let fit_model = match model {
                ModelArg::TwoLayerInner => FitModel::TwoLayerInner {
                    outer: outer.ok_or_else(|| CliError::Usage("two-layer-inner needs --outer".into()))?,
                    r1: r1.ok_or_else(|| CliError::Usage("two-layer-inner needs --r1".into()))?,
                },
                ModelArg::LConstants => FitModel::LConstants { breakpoints },
                ModelArg::Polynomial => FitModel::SinglePolynomial {
                    degree: degree.ok_or_else(|| CliError::Usage("polynomial needs --degree".into()))?,
                },
            };
            let tail = tail_alpha.map(|alpha| Tail {
                alpha,
                law: match tail_coefficients[..] {
                    [c] => Law::Constant(c),
                    _ => Law::Polynomial(tail_coefficients.clone()),
                },
            });
            let initial_guesses = guesses.iter().map(|g| parse_vector(g)).collect::<Result<Vec<_>, _>>()?;
            let mut a = Artifact::new("invert", Format::Text)
                .config("eigenvalues", eigenvalues.display())
                .config("eigenvalue_count", data.len())
                .config("model", serde_json::to_string(&fit_model).expect("model serializes"))
                .config("guesses", guesses.join(" "));
            if let Some(t) = &tail {
                a = a.config("tail_alpha", real(t.alpha)).config(
                    "tail_coefficients",
                    tail_coefficients.iter().map(|c| real(*c)).collect::<Vec<_>>().join(";"),
                );
            }
            let result = fit_profile(&FitProblem {
                eigenvalues: data,
                model: fit_model,
                tail,
                initial_guesses,
            })?;
            a.summary = Some(to_value(&result));
            Ok((a, out))
        }
        Command::Mollify { profile, j, grid, out } => {
            let p = load_profile(&profile.profile)?;
            if grid < 2 || j.is_empty() {
                return Err(CliError::Usage("need --grid ≥ 2 and at least one --j".into()));
            }
            let source: Arc<dyn C11Function> = Arc::new(ProfileC11::new(p.clone())?);
            let xs: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
            let curvature = xs
                .iter()
                .filter_map(|&x| p.eval_n(x, 2).ok())
                .map(f64::abs)
                .fold(0.0, f64::max);
            let mut table = Table::new("j,width,sup_abs_error,sup_second_derivative");
            let mut errors = Vec::new();
            for &index in &j {
                let m = mollify(source.clone(), index)?;
                let err = xs.iter().map(|&x| (m.value(x) - source.value(x)).abs()).fold(0.0, f64::max);
                let second = xs.iter().map(|&x| m.second_derivative(x).abs()).fold(0.0, f64::max);
                errors.push(err);
                table.rows.push(vec![Cell::Int(index as i64), Cell::Real(m.width()), Cell::Real(err), Cell::Real(second)]);
            }
            let mut a = Artifact::new("mollify", Format::Csv)
                .config("profile", profile.profile.display())
                .config("j", j.iter().map(u32::to_string).collect::<Vec<_>>().join(";"))
                .config("grid", grid);
            a.summary = Some(json!({
                "source_sup_second_derivative": curvature,
                "error_non_increasing": errors.windows(2).all(|w| w[1] <= w[0]),
            }));
            a.table = Some(table);
            Ok((a, out))
        }
    }
}
