use crate::Scalar;

#[derive(Debug, Clone)]
pub struct SimplexOptions<T> {
    pub max_iterations: usize,
    /// Convergence on the spread of vertex values.
    pub f_tol: T,
    /// Convergence on the simplex extent (infinity norm from the best vertex).
    pub x_tol: T,
    /// Offset of the initial vertices along each coordinate.
    pub initial_step: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct SimplexResult<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best vertex value after each iteration (index 0 is the initial simplex).
    pub best_history: Vec<T>,
}

fn sanitize<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Nelder-Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], opts: &SimplexOptions<T>) -> SimplexResult<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    assert_eq!(opts.initial_step.len(), n, "one initial step per coordinate");
    let alpha = T::one();
    let gamma = T::lit(2.0);
    let rho = T::lit(0.5);
    let sigma = T::lit(0.5);

    let mut evaluations = 0usize;
    let mut eval = |x: &[T], evaluations: &mut usize| {
        *evaluations += 1;
        sanitize(f(x))
    };

    let mut verts: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    verts.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step[i];
        verts.push(v);
    }
    let mut vals: Vec<T> = verts.iter().map(|v| eval(v, &mut evaluations)).collect();

    let order = |verts: &mut Vec<Vec<T>>, vals: &mut Vec<T>| {
        let mut idx: Vec<usize> = (0..verts.len()).collect();
        // Stable: ties keep their previous order, so an incumbent best is never displaced by an equal value.
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        *verts = idx.iter().map(|&i| verts[i].clone()).collect();
        *vals = idx.iter().map(|&i| vals[i]).collect();
    };

    order(&mut verts, &mut vals);
    let mut best_history = vec![vals[0]];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        let f_spread = vals[n] - vals[0];
        let x_spread = verts[1..].iter().fold(T::zero(), |acc, v| {
            v.iter()
                .zip(&verts[0])
                .fold(acc, |a, (vi, bi)| a.max((*vi - *bi).abs()))
        });
        let f_ok = f_spread <= opts.f_tol || (vals[n].is_infinite() && vals[0].is_infinite());
        if f_ok && x_spread <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); n];
        for v in &verts[..n] {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += *vi;
            }
        }
        let inv_n = T::one() / T::from_count(n);
        centroid.iter_mut().for_each(|c| *c *= inv_n);

        let along = |t: T, from: &[T]| -> Vec<T> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, p)| *c + t * (*p - *c))
                .collect()
        };

        let worst = verts[n].clone();
        let xr = along(-alpha, &worst);
        let fr = eval(&xr, &mut evaluations);

        if fr < vals[0] {
            let xe = along(-alpha * gamma, &worst);
            let fe = eval(&xe, &mut evaluations);
            if fe < fr {
                verts[n] = xe;
                vals[n] = fe;
            } else {
                verts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            verts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc, accept) = if fr < vals[n] {
                let xc = along(-alpha * rho, &worst);
                let fc = eval(&xc, &mut evaluations);
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = along(rho, &worst);
                let fc = eval(&xc, &mut evaluations);
                let ok = fc < vals[n];
                (xc, fc, ok)
            };
            if accept {
                verts[n] = xc;
                vals[n] = fc;
            } else {
                let best = verts[0].clone();
                for i in 1..=n {
                    let shrunk: Vec<T> = best
                        .iter()
                        .zip(&verts[i])
                        .map(|(b, v)| *b + sigma * (*v - *b))
                        .collect();
                    vals[i] = eval(&shrunk, &mut evaluations);
                    verts[i] = shrunk;
                }
            }
        }
        order(&mut verts, &mut vals);
        best_history.push(vals[0]);
    }

    SimplexResult {
        x: verts[0].clone(),
        f: vals[0],
        iterations,
        evaluations,
        converged,
        best_history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let opts = SimplexOptions {
            max_iterations: 5000,
            f_tol: 1e-14,
            x_tol: 1e-9,
            initial_step: vec![0.5, 0.5],
        };
        let res = nelder_mead(
            |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &opts,
        );
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-5 && (res.x[1] - 1.0).abs() < 1e-5);
        assert!(res.best_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn flat_objective_keeps_start() {
        let opts = SimplexOptions {
            max_iterations: 200,
            f_tol: 1e-12,
            x_tol: 1e-8,
            initial_step: vec![0.1],
        };
        let res = nelder_mead(|_x: &[f64]| 0.0, &[2.9], &opts);
        assert!(res.converged);
        assert_eq!(res.x[0], 2.9);
    }
}
