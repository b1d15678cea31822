//! Independent-oracle checks for the numerical g-and-k machinery: a
//! coarse-to-fine grid search against the optimizer and a least-squares
//! quadratic-surface fit against the finite-difference observed information.

use dnc_im::models::{
    default_init, log_likelihood, mle, observed_information, sample, Dataset, ModelSpec,
    ParameterVector,
};
use dnc_im::summaries::summarize_block;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn ll(model: &ModelSpec, theta: &[f64], data: &Dataset) -> f64 {
    log_likelihood(model, &ParameterVector::from_slice(theta), data).unwrap_or(f64::NEG_INFINITY)
}

/// Coarse-to-fine grid maximization, independent of the quasi-Newton path.
fn grid_search_mle(model: &ModelSpec, data: &Dataset, mut lo: [f64; 4], mut hi: [f64; 4]) -> [f64; 4] {
    let mut best = [0.0; 4];
    for _round in 0..7 {
        let mut best_ll = f64::NEG_INFINITY;
        let steps = 6usize;
        let axis = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / steps as f64;
        for i0 in 0..=steps {
            for i1 in 0..=steps {
                for i2 in 0..=steps {
                    for i3 in 0..=steps {
                        let theta = [
                            axis(lo[0], hi[0], i0),
                            axis(lo[1], hi[1], i1),
                            axis(lo[2], hi[2], i2),
                            axis(lo[3], hi[3], i3),
                        ];
                        let v = ll(model, &theta, data);
                        if v > best_ll {
                            best_ll = v;
                            best = theta;
                        }
                    }
                }
            }
        }
        for j in 0..4 {
            let span = (hi[j] - lo[j]) * 0.35;
            lo[j] = best[j] - span / 2.0;
            hi[j] = best[j] + span / 2.0;
        }
    }
    best
}

#[test]
fn gk_block_summary_matches_grid_search_oracle() {
    let model = ModelSpec::GandK { c: 0.8 };
    let truth = ParameterVector::new(vec![3.0, 1.0, 2.0, 0.5]);
    let data = sample(&model, &truth, 50, &mut rng(301)).unwrap();

    let summary = summarize_block(&model, &data).unwrap();
    let opt = summary.theta_hat.as_slice();

    let grid = grid_search_mle(&model, &data, [2.0, 0.3, 0.3, -0.1], [4.0, 2.0, 3.5, 1.4]);

    // The optimizer must do at least as well as the grid, and land within
    // the final grid resolution of its maximizer.
    let ll_opt = ll(&model, opt, &data);
    let ll_grid = ll(&model, &grid, &data);
    assert!(ll_opt >= ll_grid - 1e-6, "optimizer {ll_opt} vs grid {ll_grid}");
    for j in 0..4 {
        assert!(
            (opt[j] - grid[j]).abs() < 0.02,
            "coord {j}: optimizer {} vs grid {}",
            opt[j],
            grid[j]
        );
    }
}

#[test]
fn gk_observed_information_matches_quadratic_fit_oracle() {
    let model = ModelSpec::GandK { c: 0.8 };
    let truth = ParameterVector::new(vec![3.0, 1.0, 2.0, 0.5]);
    let data = sample(&model, &truth, 120, &mut rng(302)).unwrap();
    let hat = mle(&model, &data, &default_init(&model, &data)).unwrap();
    let info = observed_information(&model, &hat, &data).unwrap();

    // Least-squares quadratic surface on the 81-point stencil
    // {-h, 0, h}^4 around the estimate.
    let h: Vec<f64> = hat.as_slice().iter().map(|t| 2e-3 * (1.0 + t.abs())).collect();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(81);
    let mut vals: Vec<f64> = Vec::with_capacity(81);
    for i0 in -1i32..=1 {
        for i1 in -1i32..=1 {
            for i2 in -1i32..=1 {
                for i3 in -1i32..=1 {
                    let d = [
                        i0 as f64 * h[0],
                        i1 as f64 * h[1],
                        i2 as f64 * h[2],
                        i3 as f64 * h[3],
                    ];
                    let theta: Vec<f64> =
                        hat.as_slice().iter().zip(&d).map(|(t, dj)| t + dj).collect();
                    // Design row: 1, d_j, d_j^2 / 2, d_i d_j.
                    let mut row = vec![1.0];
                    row.extend_from_slice(&d);
                    for a in 0..4 {
                        for b in a..4 {
                            row.push(if a == b { 0.5 * d[a] * d[a] } else { d[a] * d[b] });
                        }
                    }
                    rows.push(row);
                    vals.push(ll(&model, &theta, &data));
                }
            }
        }
    }
    let ncols = rows[0].len();
    let design = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let rhs = DVector::from_vec(vals);
    let coef = design.svd(true, true).solve(&rhs, 1e-12).unwrap();

    // Coefficients 5.. are the Hessian entries (diagonal then upper).
    let mut hess = DMatrix::zeros(4, 4);
    let mut idx = 5;
    for a in 0..4 {
        for b in a..4 {
            hess[(a, b)] = coef[idx];
            hess[(b, a)] = coef[idx];
            idx += 1;
        }
    }
    let fit_info = -hess;

    let diff = (&fit_info - &info).norm() / info.norm();
    assert!(diff < 5e-3, "relative Frobenius difference {diff}\nfit {fit_info}\nfd {info}");
}
