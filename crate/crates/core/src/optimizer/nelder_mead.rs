/// Outcome of a Nelder–Mead maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximizes `f` from `x0` with the standard reflection/expansion/
/// contraction/shrink moves. `f` may return `-inf` to mark infeasible
/// points. Stops when the spread of simplex values is within `tol`
/// relative to the best value (and the simplex has shrunk below `x_tol`
/// in every coordinate), or after `max_iter` iterations.
pub fn maximize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    tol: f64,
    x_tol: f64,
    max_iter: usize,
) -> Simplex {
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    pts.push((x0.to_vec(), eval(x0, &mut evaluations)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x, &mut evaluations);
        pts.push((x, v));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        pts.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best, worst) = (pts[0].1, pts[n].1);
        let spread = (best - worst).abs();
        let size = (0..n)
            .map(|i| pts.iter().map(|p| (p.0[i] - pts[0].0[i]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if best.is_finite() && spread <= tol * best.abs().max(f64::MIN_POSITIVE) && size <= x_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|i| pts[..n].iter().map(|p| p.0[i]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evaluations);
        if fr > pts[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evaluations);
            pts[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > pts[n - 1].1 {
            pts[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr > pts[n].1 {
            let x = along(0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        };
        if fc > pts[n].1.max(fr) {
            pts[n] = (xc, fc);
            continue;
        }
        let x_best = pts[0].0.clone();
        for p in pts.iter_mut().skip(1) {
            let x: Vec<f64> = p.0.iter().zip(&x_best).map(|(a, b)| b + 0.5 * (a - b)).collect();
            let v = eval(&x, &mut evaluations);
            *p = (x, v);
        }
    }
    pts.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, value) = pts.swap_remove(0);
    Simplex {
        x,
        value,
        iterations,
        evaluations,
        converged,
    }
}
