//! Alpha-stable family: Chambers sampling and an inverse-Fourier quadrature
//! density. The density path is expensive by construction and is never used
//! inside nested Monte Carlo loops.

use rand::Rng;
use rand_distr::Distribution;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::models::optim;

/// One standard draw (c = 1, mu = 0) by the Chambers algorithm.
///
/// U ~ Unif(-pi/2, pi/2) and W ~ Exp(1) combine through the alpha != 1 or
/// alpha = 1 formula.
fn chambers_standard<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
    let w: f64 = rand_distr::Exp1.sample(rng);
    let w = w.max(1e-300);
    if (alpha - 1.0).abs() < 1e-12 {
        let t = FRAC_PI_2 + beta * u;
        (1.0 / FRAC_PI_2) * (t * u.tan() - beta * ((FRAC_PI_2 * w * u.cos()) / t).ln())
    } else {
        let zeta = -beta * (PI * alpha / 2.0).tan();
        let xi = (-zeta).atan() / alpha;
        let cos_u = u.cos();
        (1.0 + zeta * zeta).powf(1.0 / (2.0 * alpha))
            * ((alpha * (u + xi)).sin() / cos_u.powf(1.0 / alpha))
            * ((u - alpha * (u + xi)).cos() / w).powf((1.0 - alpha) / alpha)
    }
}

/// Sample n observations at theta = (mu, c, beta) with fixed alpha,
/// including the location/scale mapping for both alpha regimes.
pub(crate) fn sample_stable<R: Rng + ?Sized>(
    alpha: f64,
    theta: &[f64],
    n: usize,
    rng: &mut R,
) -> Vec<f64> {
    let (mu, c, beta) = (theta[0], theta[1], theta[2]);
    let shift = if (alpha - 1.0).abs() < 1e-12 {
        2.0 / PI * beta * c * c.ln() + mu
    } else {
        mu
    };
    (0..n)
        .map(|_| c * chambers_standard(alpha, beta, rng) + shift)
        .collect()
}

/// Stable density at x by oscillation-aware quadrature of the inverse
/// Fourier integral f(x) = (1/pi) int_0^inf e^{-(ct)^alpha} cos(phase(t)) dt.
pub(crate) fn stable_pdf(alpha: f64, mu: f64, c: f64, beta: f64, x: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("stable scale must be positive, got {c}")));
    }
    // Truncate where the envelope reaches ~1e-18.
    let t_max = 41.45_f64.powf(1.0 / alpha) / c;
    let is_one = (alpha - 1.0).abs() < 1e-12;
    let skew_fac = if is_one { 0.0 } else { beta * (PI * alpha / 2.0).tan() };

    let integrand = |t: f64| -> f64 {
        if t <= 0.0 {
            return 1.0; // cos(0) with unit envelope
        }
        let ct_a = (c * t).powf(alpha);
        let phase = if is_one {
            t * (mu - x) - beta * (2.0 / PI) * (c * t) * t.ln()
        } else {
            t * (mu - x) + skew_fac * ct_a
        };
        (-ct_a).exp() * phase.cos()
    };

    // Panel width bounded by the fastest phase rotation.
    let freq = if is_one {
        (mu - x).abs() + beta.abs() * (2.0 / PI) * c * (t_max.ln().abs() + 1.0)
    } else {
        (mu - x).abs() + skew_fac.abs() * alpha * c.powf(alpha) * t_max.powf(alpha - 1.0)
    };
    let n_panels = ((t_max * freq.max(1.0) / FRAC_PI_2).ceil() as usize).clamp(8, 50_000);
    let width = t_max / n_panels as f64;
    let tol = 1e-12 / n_panels as f64;

    let mut acc = 0.0;
    for i in 0..n_panels {
        let a = i as f64 * width;
        acc += adaptive_simpson(&integrand, a, a + width, tol, 24)?;
    }
    Ok(acc / PI)
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure(format!(
            "stable density quadrature did not converge on [{a}, {b}]"
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

pub(crate) fn stable_log_likelihood(alpha: f64, theta: &[f64], obs: &[f64]) -> Result<f64> {
    let (mu, c, beta) = (theta[0], theta[1], theta[2]);
    let mut acc = 0.0;
    for &x in obs {
        let f = stable_pdf(alpha, mu, c, beta, x)?;
        if !(f > 0.0) {
            return Err(Error::QuadratureFailure(format!(
                "stable density non-positive at x = {x} (cancellation)"
            )));
        }
        acc += f.ln();
    }
    Ok(acc)
}

/// One optimizer attempt for the stable MLE (finite-difference gradients).
pub(crate) fn stable_mle_attempt(
    x0: &[f64],
    alpha: f64,
    data: &crate::models::Dataset,
    bounds: &[(f64, f64)],
) -> std::result::Result<Vec<f64>, String> {
    let obs = &data.observations;
    let f = |x: &[f64]| -> f64 {
        stable_log_likelihood(alpha, x, obs).unwrap_or(f64::NEG_INFINITY)
    };
    let mut fg = |x: &[f64]| -> (f64, Vec<f64>) {
        let v = f(x);
        if !v.is_finite() {
            return (v, vec![0.0; x.len()]);
        }
        (v, optim::fd_gradient(&f, x, 1e-6))
    };
    optim::maximize(&mut fg, &f, x0, bounds)
}
