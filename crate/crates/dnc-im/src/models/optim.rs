//! Box-constrained quasi-Newton machinery for numerical maximum likelihood:
//! BFGS ascent, a Newton polish pass, and finite-difference derivatives.

use nalgebra::{Cholesky, DMatrix, DVector};

/// Central finite-difference gradient with step h_j = rel (1 + |x_j|).
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> Vec<f64> {
    let p = x.len();
    let mut g = vec![0.0; p];
    let mut xp = x.to_vec();
    for j in 0..p {
        let h = rel * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central finite-difference Hessian with step h_j = rel (1 + |x_j|),
/// symmetrized as (H + H^T) / 2.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], rel: f64) -> DMatrix<f64> {
    let p = x.len();
    let h: Vec<f64> = x.iter().map(|&v| rel * (1.0 + v.abs())).collect();
    let f0 = f(x);
    let mut hess = DMatrix::zeros(p, p);
    let mut xp = x.to_vec();
    for i in 0..p {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..p {
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp);
            xp[j] = x[j] - h[j];
            let fpm = f(&xp);
            xp[i] = x[i] - h[i];
            let fmm = f(&xp);
            xp[j] = x[j] + h[j];
            let fmp = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Clamp a point strictly inside the open box.
pub(crate) fn project_interior(bounds: &[(f64, f64)], x: &mut [f64]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        let margin = if lo.is_finite() && hi.is_finite() {
            1e-8 * (hi - lo)
        } else {
            1e-8
        };
        if lo.is_finite() && *v < lo + margin {
            *v = lo + margin;
        }
        if hi.is_finite() && *v > hi - margin {
            *v = hi - margin;
        }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// The convergence contract on the finite-difference gradient at the
/// returned maximizer: sup-norm below 1e-5 (1 + |loglik|).
pub(crate) fn grad_criterion(loglik: f64) -> f64 {
    1e-5 * (1.0 + loglik.abs())
}

/// Maximize a log-likelihood with BFGS ascent followed by a Newton polish,
/// then verify the finite-difference gradient criterion.
///
/// `fg` returns the log-likelihood and its gradient (analytic where
/// available, finite differences otherwise); `f` returns the value alone.
/// Non-finite values mark infeasible points. Errors are reported as reason
/// strings so the caller can manage the restart budget.
pub(crate) fn maximize(
    fg: &mut dyn FnMut(&[f64]) -> (f64, Vec<f64>),
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    bounds: &[(f64, f64)],
) -> Result<Vec<f64>, String> {
    let p = x0.len();
    let mut x = x0.to_vec();
    project_interior(bounds, &mut x);

    let (mut fx, mut gx) = fg(&x);
    if !fx.is_finite() {
        return Err("log-likelihood not finite at the starting point".into());
    }

    // Inverse "Hessian" of the ascent problem, seeded with coordinate scales.
    let mut hinv = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let s = 0.05 * (1.0 + x[j].abs());
        hinv[(j, j)] = s * s;
    }
    let mut first_update = true;
    let mut stalls = 0usize;

    for _ in 0..200 {
        if sup_norm(&gx) <= 0.3 * grad_criterion(fx) {
            break;
        }
        let g = DVector::from_column_slice(&gx);
        let mut d = &hinv * &g;
        if d.dot(&g) <= 0.0 {
            // Reset to a scaled-gradient step when the update degenerates.
            for j in 0..p {
                d[j] = g[j] * hinv[(j, j)].max(1e-12);
            }
        }

        let mut t = 1.0;
        let mut accepted = false;
        let slope = d.dot(&g);
        for _ in 0..40 {
            let mut xn: Vec<f64> = (0..p).map(|j| x[j] + t * d[j]).collect();
            project_interior(bounds, &mut xn);
            let (fn_, gn) = fg(&xn);
            if fn_.is_finite() && fn_ >= fx + 1e-4 * t * slope.min(0.0) && fn_ > fx - 1e-16 {
                if fn_ >= fx {
                    let s = DVector::from_iterator(p, (0..p).map(|j| xn[j] - x[j]));
                    let y = DVector::from_iterator(p, (0..p).map(|j| gn[j] - gx[j]));
                    // BFGS update on the ascent problem uses -y.
                    let ys = -y.dot(&s);
                    if ys > 1e-12 * s.norm() * y.norm() {
                        if first_update {
                            let scale = ys / y.dot(&y);
                            hinv = DMatrix::identity(p, p) * scale.abs().max(1e-12);
                            first_update = false;
                        }
                        let rho = 1.0 / ys;
                        let hy = &hinv * (-&y);
                        let syh = (-&y).dot(&hy);
                        // Sherman-Morrison form of the BFGS inverse update.
                        let term1 = (&s * s.transpose()) * (rho * (1.0 + rho * syh));
                        let term2 = (&hy * s.transpose() + &s * hy.transpose()) * rho;
                        hinv = hinv + term1 - term2;
                    }
                    if (fn_ - fx).abs() <= 1e-13 * (1.0 + fx.abs()) {
                        stalls += 1;
                    } else {
                        stalls = 0;
                    }
                    x = xn;
                    fx = fn_;
                    gx = gn;
                    accepted = true;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted || stalls >= 3 {
            break;
        }
    }

    // Newton polish on the finite-difference derivatives.
    polish(f, &mut x, bounds);

    let fx = f(&x);
    if !fx.is_finite() {
        return Err("log-likelihood not finite at the candidate maximizer".into());
    }
    let g = fd_gradient(f, &x, 1e-5);
    let sup = sup_norm(&g);
    if sup < grad_criterion(fx) {
        Ok(x)
    } else {
        Err(format!(
            "gradient criterion not met: sup |grad| = {sup:.3e} vs {:.3e}",
            grad_criterion(fx)
        ))
    }
}

fn polish(f: &dyn Fn(&[f64]) -> f64, x: &mut Vec<f64>, bounds: &[(f64, f64)]) {
    let p = x.len();
    for _ in 0..10 {
        let fx = f(x);
        if !fx.is_finite() {
            return;
        }
        let g = fd_gradient(f, x, 1e-5);
        if sup_norm(&g) < 0.3 * grad_criterion(fx) {
            return;
        }
        let h = fd_hessian(f, x, 1e-4);
        let neg_h = -h;
        let chol = match Cholesky::new(neg_h) {
            Some(c) => c,
            None => return,
        };
        let d = chol.solve(&DVector::from_column_slice(&g));
        let mut improved = false;
        for &t in &[1.0, 0.5, 0.25, 0.125, 0.0625] {
            let mut xn: Vec<f64> = (0..p).map(|j| x[j] + t * d[j]).collect();
            project_interior(bounds, &mut xn);
            let fn_ = f(&xn);
            if fn_.is_finite() && fn_ > fx {
                *x = xn;
                improved = true;
                break;
            }
        }
        if !improved {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic() {
        // f(x) = -(x0-1)^2 - 2 (x1+0.5)^2, max at (1, -0.5).
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 0.5).powi(2);
        let mut fg = |x: &[f64]| (f(x), vec![-2.0 * (x[0] - 1.0), -4.0 * (x[1] + 0.5)]);
        let bounds = [(-10.0, 10.0), (-10.0, 10.0)];
        let x = maximize(&mut fg, &f, &[3.0, 3.0], &bounds).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-5);
        assert!((x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn fd_hessian_of_quadratic() {
        let f = |x: &[f64]| -(2.0 * x[0] * x[0] + 3.0 * x[0] * x[1] + 4.0 * x[1] * x[1]);
        let h = fd_hessian(&f, &[0.3, -0.2], 1e-4);
        assert!((h[(0, 0)] + 4.0).abs() < 1e-6);
        assert!((h[(0, 1)] + 3.0).abs() < 1e-6);
        assert!((h[(1, 1)] + 8.0).abs() < 1e-6);
    }
}
