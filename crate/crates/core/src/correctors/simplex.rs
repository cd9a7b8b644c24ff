//! Downhill simplex (Nelder–Mead) restricted to an axis-aligned box. Trial
//! points are projected onto the box before evaluation.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and every vertex lies within this (relative to the box width) of the best.
    pub x_tol: f64,
    /// Initial edge length as a fraction of the box width.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            f_tol: 1e-10,
            x_tol: 1e-9,
            initial_step: 0.1,
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

pub fn minimize_in_box<F>(f: F, start: &[f64], lower: &[f64], upper: &[f64], opts: SimplexOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    assert!(lower.len() == dim && upper.len() == dim);
    let width: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut x0 = start.to_vec();
    project(&mut x0, lower, upper);
    let mut simplex = vec![x0.clone()];
    for d in 0..dim {
        let mut v = x0.clone();
        let step = opts.initial_step * width[d];
        // Step toward the interior when the start sits near the upper bound.
        v[d] = if v[d] + step <= upper[d] { v[d] + step } else { v[d] - step };
        project(&mut v, lower, upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[dim] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).zip(&width).map(|((a, b), w)| (a - b).abs() / w.max(f64::MIN_POSITIVE)))
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol && size <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|d| simplex[..dim].iter().map(|v| v[d]).sum::<f64>() / dim as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            project(&mut p, lower, upper);
            p
        };

        let reflected = toward(alpha);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = toward(gamma);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = toward(rho * alpha);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = toward(-rho);
            let fc = eval(&c);
            (c, fc)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=dim {
            for d in 0..dim {
                simplex[i][d] = best[d] + sigma * (simplex[i][d] - best[d]);
            }
            values[i] = eval(&simplex[i]);
        }
    }
    let (bi, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
    Minimum {
        x: simplex[bi].clone(),
        value: values[bi],
        iterations,
        converged,
    }
}
