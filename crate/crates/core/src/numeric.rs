//! Small numerical helpers: monotone root bracketing and a derivative-free
//! Nelder–Mead minimiser.

/// Inverts a nondecreasing function by bisection.
///
/// Returns a point `x` in `[lo, hi]` with `f(x)` within the bracket of
/// `target`; `f(lo) < target <= f(hi)` is expected but not required (the
/// nearer end is returned when the target lies outside the range).
pub fn invert_monotone<F>(f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    if f(lo) >= target {
        return lo;
    }
    if f(hi) < target {
        return hi;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * (1.0 + mid.abs()) {
            break;
        }
        let value = f(mid);
        if value < target {
            lo = mid;
        } else if value > target {
            hi = mid;
        } else {
            return mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Relative tolerance on both simplex function spread and vertex spread.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial simplex edge lengths, one per coordinate.
    pub steps: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f` with the standard Nelder–Mead simplex (reflection 1,
/// expansion 2, contraction 0.5, shrink 0.5).
pub fn nelder_mead<F>(f: F, start: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    assert_eq!(opts.steps.len(), dim, "one step per coordinate");
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for (i, step) in opts.steps.iter().enumerate() {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let f_spread = values.iter().map(|v| (v - best).abs()).fold(0.0, f64::max);
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())))
            .fold(0.0, f64::max);
        if f_spread <= opts.tolerance * (1.0 + best.abs()) && x_spread <= opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let f_reflected = f(&reflected);
        if f_reflected < values[0] {
            let expanded = along(2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[dim] = expanded;
                values[dim] = f_expanded;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_reflected;
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < values[dim] {
            let c = along(0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = along(-0.5);
            let fc = f(&c);
            (c, fc)
        };
        if f_contracted < values[dim].min(f_reflected) {
            simplex[dim] = contracted;
            values[dim] = f_contracted;
            continue;
        }
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        point: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_inverts_cubic() {
        let x = invert_monotone(|x| x * x * x, 8.0, -10.0, 10.0, 1e-12, 200);
        assert!((x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bisection_clamps_outside_range() {
        assert_eq!(invert_monotone(|x| x, -5.0, 0.0, 1.0, 1e-12, 200), 0.0);
        assert_eq!(invert_monotone(|x| x, 5.0, 0.0, 1.0, 1e-12, 200), 1.0);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let opts = NelderMeadOptions {
            tolerance: 1e-12,
            max_iterations: 5000,
            steps: vec![0.5, 0.5],
        };
        let min = nelder_mead(rosen, &[-1.2, 1.0], &opts);
        assert!(min.converged);
        assert!((min.point[0] - 1.0).abs() < 1e-5, "{:?}", min.point);
        assert!((min.point[1] - 1.0).abs() < 1e-5, "{:?}", min.point);
    }

    #[test]
    fn nelder_mead_reports_iteration_cap() {
        let opts = NelderMeadOptions {
            tolerance: 1e-15,
            max_iterations: 3,
            steps: vec![1.0, 1.0],
        };
        let min = nelder_mead(|p| p[0] * p[0] + p[1] * p[1], &[5.0, 5.0], &opts);
        assert!(!min.converged);
        assert_eq!(min.iterations, 3);
    }
}
