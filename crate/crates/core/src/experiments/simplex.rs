//! Nelder–Mead descent.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop when the objective spread over the simplex falls below this.
    pub f_tol: f64,
    /// Also require the simplex diameter to fall below this, relative to the best vertex.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Relative size of the initial simplex.
    pub initial_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], opts: SimplexOptions) -> SimplexOutcome {
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += if p[i] != 0.0 { opts.initial_step * p[i] } else { opts.initial_step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let scale = pts[0].iter().map(|v| v.abs()).fold(1.0, f64::max);
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (vals[n] - vals[0]).abs() <= opts.f_tol && diameter <= opts.x_tol * scale {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n).map(|d| pts[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|d| centroid[d] + t * (pts[n][d] - centroid[d])).collect() };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                (pts[n], vals[n]) = (xe, fe);
            } else {
                (pts[n], vals[n]) = (xr, fr);
            }
        } else if fr < vals[n - 1] {
            (pts[n], vals[n]) = (xr, fr);
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < vals[n].min(fr) {
                (pts[n], vals[n]) = (xc, fc);
            } else {
                let best = pts[0].clone();
                for i in 1..=n {
                    pts[i] = (0..n).map(|d| best[d] + 0.5 * (pts[i][d] - best[d])).collect();
                    vals[i] = eval(&pts[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexOutcome {
        x: pts[best].clone(),
        f: vals[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = nelder_mead(
            f,
            &[-1.2, 1.0],
            SimplexOptions {
                f_tol: 1e-20,
                x_tol: 1e-10,
                max_iter: 2000,
                initial_step: 0.1,
            },
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{out:?}");
    }

    #[test]
    fn one_dimensional_quadratic() {
        let out = nelder_mead(
            |x| (x[0] - 3.0).powi(2),
            &[10.0],
            SimplexOptions {
                f_tol: 1e-14,
                x_tol: 1e-8,
                max_iter: 200,
                initial_step: 0.1,
            },
        );
        assert!((out.x[0] - 3.0).abs() < 1e-6, "{out:?}");
    }
}
