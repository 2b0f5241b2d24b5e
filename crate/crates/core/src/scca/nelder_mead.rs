//! Derivative-free Nelder–Mead maximization.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.25,
            max_evals: 2000,
            f_tol: 1e-12,
            x_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Maximizes `f` from `x0`. The returned value is never below `f(x0)`.
pub fn maximize<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut f = f;
    let dim = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };

    let f0 = eval(x0, &mut evals);
    if dim == 0 {
        return NelderMeadResult {
            x: Vec::new(),
            value: f0,
            evals,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut values: Vec<f64> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        values.push(eval(&x, &mut evals));
        simplex.push(x);
    }

    // dimension-adapted coefficients (Gao and Han)
    let n = dim as f64;
    let (alpha, gamma, rho, sigma) = if dim > 2 {
        (1.0, 1.0 + 2.0 / n, 0.75 - 0.5 / n, 1.0 - 1.0 / n)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut order: Vec<usize> = (0..=dim).collect();

    while evals + 2 <= opts.max_evals {
        // descending: best first
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = values[best] - values[worst];
        let size = simplex
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max);
        if spread.abs() <= opts.f_tol * (1.0 + values[best].abs()) || size <= opts.x_tol {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr > values[best] {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            if fe > fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr > values[second_worst] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr > values[worst] {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc > values[worst].max(fr) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let xb = simplex[best].clone();
        for &i in order.iter().skip(1) {
            if evals >= opts.max_evals {
                break;
            }
            for (x, b) in simplex[i].iter_mut().zip(&xb) {
                *x = b + sigma * (*x - b);
            }
            values[i] = eval(&simplex[i].clone(), &mut evals);
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if values[i] > values[best] {
            best = i;
        }
    }
    NelderMeadResult {
        x: simplex[best].clone(),
        value: values[best],
        evals,
    }
}
