//! Derivative-free minimization on a simplex.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once the largest vertex distance from the best vertex is below this.
    pub diameter_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 1000, diameter_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead with the standard coefficients (reflect 1, expand 2,
/// contract 1/2, shrink 1/2), starting from `x0` and `x0 + step e_i`.
/// Non-finite objective values are treated as `+inf`.
pub fn minimize<const D: usize>(
    mut f: impl FnMut(&[f64; D]) -> f64,
    x0: [f64; D],
    step: f64,
    opts: NelderMeadOptions,
) -> Minimum<D> {
    let mut evals = 0;
    let mut eval = |x: &[f64; D]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    simplex.push((x0, eval(&x0)));
    for i in 0..D {
        let mut x = x0;
        x[i] += step;
        simplex.push((x, eval(&x)));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < opts.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; D];
        for (x, _) in &simplex[..D] {
            for k in 0..D {
                centroid[k] += x[k] / D as f64;
            }
        }
        let worst = simplex[D];
        let along = |t: f64| {
            let mut x = [0.0; D];
            for k in 0..D {
                x[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
            }
            x
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
            continue;
        }
        // contract toward the better of the worst and its reflection
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            (x, eval(&x))
        } else {
            let x = along(0.5);
            (x, eval(&x))
        };
        if fc < worst.1.min(fr) {
            simplex[D] = (xc, fc);
            continue;
        }
        let best = simplex[0].0;
        for v in simplex.iter_mut().skip(1) {
            for k in 0..D {
                v.0[k] = best[k] + 0.5 * (v.0[k] - best[k]);
            }
            v.1 = eval(&v.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum { x: simplex[0].0, f: simplex[0].1, iterations, evaluations: evals, converged }
}

fn diameter<const D: usize>(simplex: &[([f64; D], f64)]) -> f64 {
    let best = simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| x.iter().zip(&best).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}
