use super::linalg::{invert, solve};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct LmOptions<T> {
    pub max_iterations: usize,
    /// Relative reduction in cost below which the fit is considered converged.
    pub ftol: T,
    /// Relative step size below which the fit is considered converged.
    pub xtol: T,
    pub initial_lambda: T,
}

impl<T: Scalar> Default for LmOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: T::epsilon() * T::lit(10.0),
            xtol: T::epsilon().sqrt() * T::lit(1e-2),
            initial_lambda: T::lit(1e-3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit<T> {
    pub params: Vec<T>,
    /// Sum of squared residuals at `params`.
    pub ssr: T,
    pub residual_rms: T,
    /// Parameter covariance `s^2 (J^T J)^-1`, row-major; `None` when `J^T J` is singular.
    pub covariance: Option<Vec<T>>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> LmFit<T> {
    /// One-sigma uncertainty of parameter `i` from the covariance diagonal.
    pub fn sigma(&self, i: usize) -> Option<T> {
        let n = self.params.len();
        self.covariance
            .as_ref()
            .map(|c| c[i * n + i].max(T::zero()).sqrt())
    }
}

fn sum_sq<T: Scalar>(r: &[T]) -> T {
    r.iter().map(|v| *v * *v).sum()
}

fn jacobian<T, F>(f: &mut F, x: &[T], r0: &[T], jac: &mut [T])
where
    T: Scalar,
    F: FnMut(&[T], &mut Vec<T>),
{
    let m = r0.len();
    let n = x.len();
    let step_base = T::epsilon().cbrt();
    let mut xp = x.to_vec();
    let mut rp = Vec::with_capacity(m);
    let mut rm = Vec::with_capacity(m);
    for j in 0..n {
        let h = step_base * x[j].abs().max(T::one());
        xp[j] = x[j] + h;
        f(&xp, &mut rp);
        xp[j] = x[j] - h;
        f(&xp, &mut rm);
        xp[j] = x[j];
        let inv = T::one() / (h + h);
        for i in 0..m {
            jac[i * n + j] = (rp[i] - rm[i]) * inv;
        }
    }
}

/// Levenberg-Marquardt with Marquardt diagonal scaling and a central-difference
/// Jacobian. `residuals(x, out)` must clear and refill `out`.
pub fn levenberg_marquardt<T, F>(mut residuals: F, x0: &[T], opts: &LmOptions<T>) -> LmFit<T>
where
    T: Scalar,
    F: FnMut(&[T], &mut Vec<T>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = Vec::new();
    residuals(&x, &mut r);
    let m = r.len();
    let mut cost = sum_sq(&r);
    let mut lambda = opts.initial_lambda;
    let mut jac = vec![T::zero(); m * n];
    let mut jtj = vec![T::zero(); n * n];
    let mut jtr = vec![T::zero(); n];
    let mut trial = Vec::with_capacity(m);
    let mut converged = false;
    let mut iterations = 0;

    if !cost.is_finite() {
        return LmFit {
            params: x,
            ssr: cost,
            residual_rms: T::infinity(),
            covariance: None,
            iterations: 0,
            converged: false,
        };
    }

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        jacobian(&mut residuals, &x, &r, &mut jac);
        for a in 0..n {
            let mut g = T::zero();
            for i in 0..m {
                g += jac[i * n + a] * r[i];
            }
            jtr[a] = g;
            for b in a..n {
                let mut s = T::zero();
                for i in 0..m {
                    s += jac[i * n + a] * jac[i * n + b];
                }
                jtj[a * n + b] = s;
                jtj[b * n + a] = s;
            }
        }
        loop {
            let mut damped = jtj.clone();
            for a in 0..n {
                let d = jtj[a * n + a];
                damped[a * n + a] = d + lambda * d.max(T::epsilon());
            }
            let rhs: Vec<T> = jtr.iter().map(|g| -*g).collect();
            let Some(step) = solve(&damped, &rhs, n) else {
                lambda *= T::lit(10.0);
                if lambda > T::lit(1e16) {
                    break 'outer;
                }
                continue;
            };
            let xt: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
            residuals(&xt, &mut trial);
            let new_cost = sum_sq(&trial);
            if new_cost.is_finite() && new_cost <= cost {
                let rel_drop = (cost - new_cost) / cost.max(T::min_positive_value());
                let step_norm = step
                    .iter()
                    .zip(&x)
                    .fold(T::zero(), |acc, (s, xi)| acc.max(s.abs() / xi.abs().max(T::one())));
                x = xt;
                std::mem::swap(&mut r, &mut trial);
                cost = new_cost;
                lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                if rel_drop <= opts.ftol || step_norm <= opts.xtol || cost == T::zero() {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= T::lit(4.0);
            if lambda > T::lit(1e16) {
                // No downhill step at any damping: a (local) minimum.
                converged = true;
                break 'outer;
            }
        }
    }

    // Covariance at the final point.
    jacobian(&mut residuals, &x, &r, &mut jac);
    for a in 0..n {
        for b in a..n {
            let mut s = T::zero();
            for i in 0..m {
                s += jac[i * n + a] * jac[i * n + b];
            }
            jtj[a * n + b] = s;
            jtj[b * n + a] = s;
        }
    }
    let dof = if m > n { m - n } else { 1 };
    let s2 = cost / T::from_count(dof);
    let covariance = invert(&jtj, n).map(|inv| inv.into_iter().map(|v| v * s2).collect());
    LmFit {
        residual_rms: (cost / T::from_count(m.max(1))).sqrt(),
        params: x,
        ssr: cost,
        covariance,
        iterations,
        converged,
    }
}
